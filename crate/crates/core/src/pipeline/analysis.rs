use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelFrame;
use crate::concentration::{ci_linear, phi_threshold, rule_of_thumb_homogeneous, LinearRange};
use crate::error::{Error, Result};
use crate::estimators::{acf_phi_hat, lag_windows, ols_fit, partition_compare, residual_range, RegressionFit};
use crate::model::{summarize, CiMethod, Partition, RangeSource};
use crate::uclass::{check_u_class_sample, UDiagnosticsReport};

/// Where the confidence-set range comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum RangeChoice {
    /// Every error has the same known range.
    Known(f64),
    /// Plug-in `sqrt(n) R_hat_s` from the weighted residuals.
    Residual,
    /// Twice the fitted means (nonnegative outcomes).
    TwoMean,
    /// A common marginal range.
    Marginal(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub alpha: f64,
    pub range: RangeChoice,
    /// Named candidate partitions to rank by cluster-robust variance.
    pub partitions: Vec<(String, Partition)>,
    /// Refit without each covariate and report the coefficient changes.
    pub covariate_screen: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            range: RangeChoice::Residual,
            partitions: Vec::new(),
            covariate_screen: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: CiMethod,
    pub range_source: RangeSource,
}

/// Checks on the weighted-residual series `W_si e_i` of one coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDiagnostics {
    pub name: String,
    pub residual_range: f64,
    pub u_report: Option<UDiagnosticsReport<f64>>,
    /// `(n - 1)^-1 (R_hat^2 / (12 S^2) - 1)`.
    pub rule_of_thumb: Option<f64>,
    pub lag_windows: (usize, usize),
    pub phi_hat_short: Option<f64>,
    pub phi_hat_long: Option<f64>,
    /// Difference of half-sample means in standard deviations.
    pub half_mean_shift: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub coefficient: String,
    pub partitions: Vec<String>,
    pub values: Vec<f64>,
    pub ranking: Vec<String>,
    pub recommended: String,
    pub ties: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenRow {
    pub dropped: String,
    /// Remaining coefficients refit without `dropped`.
    pub estimates_without: Vec<(String, f64)>,
    pub max_relative_change: f64,
    pub changes_over_10_percent: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: Option<String>,
    pub seed: u64,
    pub config: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub model: String,
    pub n: usize,
    pub alpha: f64,
    pub coefficients: Vec<CoefficientRow>,
    pub diagnostics: Vec<CoefficientDiagnostics>,
    pub partition_comparison: Vec<PartitionReport>,
    pub covariate_screen: Vec<ScreenRow>,
    pub provenance: Provenance,
}

fn fit_named(frame: &ModelFrame) -> Result<RegressionFit<f64>> {
    let names = frame.column_names();
    ols_fit(&frame.design(), &frame.response).map_err(|e| match e {
        Error::RankDeficient { column } => Error::CollinearColumn {
            name: names.get(column).cloned().unwrap_or_else(|| format!("#{column}")),
        },
        other => other,
    })
}

fn diagnostics(fit: &RegressionFit<f64>, s: usize, name: String) -> Result<CoefficientDiagnostics> {
    let z = fit.weighted_residuals(s);
    let n = z.len();
    let windows = lag_windows(n);
    let r_hat = residual_range(fit, s)?;
    let mut notes = Vec::new();
    if r_hat.degenerate {
        notes.push("weighted residuals have no spread; diagnostics skipped".to_string());
        return Ok(CoefficientDiagnostics {
            name,
            residual_range: r_hat.value,
            u_report: None,
            rule_of_thumb: None,
            lag_windows: windows,
            phi_hat_short: None,
            phi_hat_long: None,
            half_mean_shift: None,
            notes,
        });
    }
    let summary = summarize(&z)?;
    let u_report = check_u_class_sample(&z, None)?;
    if !u_report.is_u {
        notes.push("weighted residuals are not centered in their observed range".to_string());
    }
    let rule = phi_threshold(rule_of_thumb_homogeneous(summary.variance, r_hat.value)?, n)?;
    let phi = |lags: usize| (lags >= 1 && lags < n).then(|| acf_phi_hat(&z, lags).map(|a| a.phi_hat)).transpose();
    let (short, long) = (phi(windows.0)?, phi(windows.1)?);
    for (label, value) in [("short", short), ("long", long)] {
        if let Some(v) = value {
            if v > rule {
                notes.push(format!("phi_hat ({label} window) {v:.4} exceeds the rule-of-thumb bound {rule:.4}"));
            }
            if v < -1.0 / (n - 1) as f64 {
                notes.push(format!("phi_hat ({label} window) {v:.4} is below -1/(n-1)"));
            }
        }
    }
    let half = n / 2;
    let shift = if half >= 2 {
        let a = z[..half].iter().sum::<f64>() / half as f64;
        let b = z[half..].iter().sum::<f64>() / (n - half) as f64;
        let d = (b - a) / summary.variance.sqrt();
        if d.abs() > 0.5 {
            notes.push(format!("half-sample means differ by {d:.2} sd; check stationarity"));
        }
        Some(d)
    } else {
        None
    };
    Ok(CoefficientDiagnostics {
        name,
        residual_range: r_hat.value,
        u_report: Some(u_report),
        rule_of_thumb: Some(rule),
        lag_windows: windows,
        phi_hat_short: short,
        phi_hat_long: long,
        half_mean_shift: shift,
        notes,
    })
}

/// OLS fit with U-class confidence sets and the diagnostics block.
pub fn fit_analysis(frame: &ModelFrame, options: &AnalysisOptions, provenance: Provenance) -> Result<AnalysisReport> {
    let fit = fit_named(frame)?;
    let names = frame.column_names();
    let n = fit.n();
    let mut coefficients = Vec::with_capacity(names.len());
    let mut diags = Vec::with_capacity(names.len());
    let known = match options.range {
        RangeChoice::Known(r) => vec![r; n],
        _ => Vec::new(),
    };
    for (s, name) in names.iter().enumerate() {
        let w = fit.weight_rows.row(s);
        let range = match options.range {
            RangeChoice::Known(_) => LinearRange::Known(&known),
            RangeChoice::Marginal(r) => LinearRange::Marginal(r),
            RangeChoice::TwoMean => LinearRange::TwoMean(&fit.fitted),
            RangeChoice::Residual => LinearRange::ResidualRange(residual_range(&fit, s)?.value),
        };
        let ci = ci_linear(fit.coefficients[s], w, range, options.alpha)?;
        coefficients.push(CoefficientRow {
            name: name.clone(),
            estimate: fit.coefficients[s],
            lower: ci.lower,
            upper: ci.upper,
            method: ci.method,
            range_source: ci.range_source,
        });
        diags.push(diagnostics(&fit, s, name.clone())?);
    }

    let mut partition_comparison = Vec::new();
    if options.partitions.len() >= 2 {
        let labels: Vec<String> = options.partitions.iter().map(|(l, _)| l.clone()).collect();
        let parts: Vec<Partition> = options.partitions.iter().map(|(_, p)| p.clone()).collect();
        for (s, name) in names.iter().enumerate() {
            let c = partition_compare(&fit, &parts, s)?;
            partition_comparison.push(PartitionReport {
                coefficient: name.clone(),
                partitions: labels.clone(),
                values: c.values,
                ranking: c.ranking.iter().map(|&k| labels[k].clone()).collect(),
                recommended: labels[c.recommended].clone(),
                ties: c.ties.iter().map(|&(a, b)| (labels[a].clone(), labels[b].clone())).collect(),
            });
        }
    }

    let mut covariate_screen = Vec::new();
    if options.covariate_screen {
        let off = frame.intercept as usize;
        for j in 0..frame.covariates.len() {
            let reduced = frame.without(j);
            if reduced.covariates.is_empty() && !reduced.intercept {
                continue;
            }
            let refit = fit_named(&reduced)?;
            let kept: Vec<usize> = (0..names.len()).filter(|&k| k != j + off).collect();
            let mut max_change: f64 = 0.0;
            let estimates_without = kept
                .iter()
                .zip(&refit.coefficients)
                .map(|(&k, &b)| {
                    let full = fit.coefficients[k];
                    let change = if full != 0.0 { ((b - full) / full).abs() } else { (b - full).abs() };
                    max_change = max_change.max(change);
                    (names[k].clone(), b)
                })
                .collect();
            covariate_screen.push(ScreenRow {
                dropped: frame.covariate_names[j].clone(),
                estimates_without,
                max_relative_change: max_change,
                changes_over_10_percent: max_change > 0.1,
            });
        }
    }

    Ok(AnalysisReport {
        model: frame.description(),
        n,
        alpha: options.alpha,
        coefficients,
        diagnostics: diags,
        partition_comparison,
        covariate_screen,
        provenance,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}  (n = {})", self.model, self.n)?;
        writeln!(f, "confidence level: {}", 1.0 - self.alpha)?;
        writeln!(f, "{:<18} {:>12} {:>12} {:>12}  range", "coefficient", "estimate", "lower", "upper")?;
        for c in &self.coefficients {
            let source = serde_json::to_value(c.range_source).ok().and_then(|v| v.as_str().map(String::from));
            writeln!(
                f,
                "{:<18} {:>12.5} {:>12.5} {:>12.5}  {}",
                c.name,
                c.estimate,
                c.lower,
                c.upper,
                source.unwrap_or_default()
            )?;
        }
        writeln!(f, "\ndiagnostics (weighted residuals):")?;
        writeln!(
            f,
            "{:<18} {:>10} {:>6} {:>10} {:>14} {:>14}",
            "coefficient", "R_hat", "U", "bound", "phi_hat short", "phi_hat long"
        )?;
        for d in &self.diagnostics {
            let u = d.u_report.map(|u| if u.is_u { "yes" } else { "no" }).unwrap_or("-");
            writeln!(
                f,
                "{:<18} {:>10.4e} {:>6} {:>10} {:>14} {:>14}",
                d.name,
                d.residual_range,
                u,
                opt(d.rule_of_thumb),
                format!("{} ({})", opt(d.phi_hat_short), d.lag_windows.0),
                format!("{} ({})", opt(d.phi_hat_long), d.lag_windows.1),
            )?;
            for note in &d.notes {
                writeln!(f, "  note: {note}")?;
            }
        }
        for p in &self.partition_comparison {
            writeln!(
                f,
                "\npartitions for {}: ranking {} (recommended {})",
                p.coefficient,
                p.ranking.join(" > "),
                p.recommended
            )?;
        }
        if !self.covariate_screen.is_empty() {
            writeln!(f, "\ncovariate screen (refit without each covariate):")?;
            for s in &self.covariate_screen {
                writeln!(
                    f,
                    "  without {:<16} max relative change {:.3}{}",
                    s.dropped,
                    s.max_relative_change,
                    if s.changes_over_10_percent { "  (> 10%)" } else { "" }
                )?;
            }
        }
        if let Some(h) = &self.provenance.input_sha256 {
            writeln!(f, "\ninput sha256: {h}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(noise: f64) -> ModelFrame {
        let n = 60;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 2.0 * x[i] + noise * ((i * 7 % 11) as f64 - 5.0) / 5.0)
            .collect();
        ModelFrame::new("y", y, vec!["x".into()], vec![x], true).unwrap()
    }

    #[test]
    fn zero_noise_gives_degenerate_sets() {
        let r = fit_analysis(&frame(0.0), &AnalysisOptions::default(), Provenance::default()).unwrap();
        for (c, truth) in r.coefficients.iter().zip([1.0, 2.0]) {
            assert!((c.estimate - truth).abs() < 1e-12);
            assert!((c.upper - c.lower).abs() < 1e-12);
            assert_eq!(c.range_source, RangeSource::ResidualRange);
        }
        assert!(r.diagnostics.iter().all(|d| d.residual_range < 1e-12));
    }

    #[test]
    fn json_round_trip_and_screen() {
        let opts = AnalysisOptions {
            covariate_screen: true,
            partitions: vec![
                ("singletons".into(), Partition::singletons(60).unwrap()),
                ("blocks".into(), Partition::sequential(60, 6).unwrap()),
            ],
            ..Default::default()
        };
        let r = fit_analysis(&frame(0.3), &opts, Provenance::default()).unwrap();
        assert_eq!(r.covariate_screen.len(), 1);
        assert_eq!(r.partition_comparison.len(), 2);
        assert_eq!(r.diagnostics[0].lag_windows, (17, 29));
        let back: AnalysisReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_string().contains("residual_range"));
    }

    #[test]
    fn duplicate_column_named() {
        let f = frame(0.3);
        let dup = ModelFrame::new(
            "y",
            f.response.clone(),
            vec!["x".into(), "x_copy".into()],
            vec![f.covariates[0].clone(), f.covariates[0].clone()],
            true,
        )
        .unwrap();
        let e = fit_analysis(&dup, &AnalysisOptions::default(), Provenance::default()).unwrap_err();
        assert_eq!(e, Error::CollinearColumn { name: "x_copy".into() });
    }
}
