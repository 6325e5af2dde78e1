use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::concentration::{phi_threshold, rule_of_thumb_homogeneous};
use crate::error::{invalid, Error, Result};
use crate::estimators::{acf_phi_hat, lag_windows, AcfEstimate};
use crate::model::summarize;
use crate::simulation::format_sig;
use crate::uclass::{check_u_class_sample, UDiagnosticsReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    let s = summarize(values)?;
    if s.range == 0.0 {
        return Err(Error::Degenerate("constant series".into()));
    }
    let width = s.range / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - s.min) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lower: s.min + k as f64 * width,
            upper: if k + 1 == bins { s.max } else { s.min + (k + 1) as f64 * width },
            count,
        })
        .collect())
}

/// Sorted `(x, F_n(x))` at each distinct value.
pub fn ecdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    out
}

/// U-class checks and autocorrelation summary of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub n: usize,
    pub u_report: UDiagnosticsReport<f64>,
    /// `(n - 1)^-1 (R^2 / (12 S^2) - 1)`.
    pub rule_of_thumb: f64,
    pub acf_short: AcfEstimate<f64>,
    pub acf_long: AcfEstimate<f64>,
    pub histogram: Vec<HistogramBin>,
    pub flags: Vec<String>,
}

pub fn diagnose_series(values: &[f64], bins: usize) -> Result<DiagnoseReport> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} values; need at least 3")));
    }
    let s = summarize(values)?;
    if s.range == 0.0 {
        return Err(Error::Degenerate("constant series".into()));
    }
    let u_report = check_u_class_sample(values, None)?;
    let rule_of_thumb = phi_threshold(rule_of_thumb_homogeneous(s.variance, s.range)?, n)?;
    let (short, long) = lag_windows(n);
    let acf_short = acf_phi_hat(values, short.max(1))?;
    let acf_long = acf_phi_hat(values, long.max(1))?;
    let mut flags = Vec::new();
    if !u_report.is_u {
        flags.push("mean is not at the midpoint of the observed range".to_string());
    }
    let floor = -1.0 / (n - 1) as f64;
    for a in [&acf_short, &acf_long] {
        if a.phi_hat < floor {
            flags.push(format!("phi_hat over {} lags is {:.4}, below -1/(n-1)", a.lags, a.phi_hat));
        } else if a.phi_hat > rule_of_thumb {
            flags.push(format!(
                "phi_hat over {} lags is {:.4}, above the rule-of-thumb bound {:.4}",
                a.lags, a.phi_hat, rule_of_thumb
            ));
        }
    }
    if acf_short.autocorrelations[0] < -0.5 {
        flags.push(format!("strong alternation: lag-1 autocorrelation {:.4}", acf_short.autocorrelations[0]));
    }
    Ok(DiagnoseReport {
        n,
        u_report,
        rule_of_thumb,
        acf_short,
        acf_long,
        histogram: histogram(values, bins)?,
        flags,
    })
}

/// First line of the histogram CSV.
pub const HISTOGRAM_SCHEMA_LINE: &str = "# densum-histogram schema=1";
/// First line of the ECDF CSV.
pub const ECDF_SCHEMA_LINE: &str = "# densum-ecdf schema=1";
/// First line of the autocorrelation CSV.
pub const ACF_SCHEMA_LINE: &str = "# densum-acf schema=1";

fn stamped<W: Write>(mut out: W, line: &str) -> Result<csv::Writer<W>> {
    writeln!(out, "{line}")?;
    Ok(csv::Writer::from_writer(out))
}

pub fn write_histogram_csv<W: Write>(out: W, bins: &[HistogramBin]) -> Result<()> {
    let mut w = stamped(out, HISTOGRAM_SCHEMA_LINE)?;
    w.write_record(["lower", "upper", "count"])?;
    for b in bins {
        w.write_record([format_sig(b.lower), format_sig(b.upper), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ecdf_csv<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = stamped(out, ECDF_SCHEMA_LINE)?;
    w.write_record(["x", "ecdf"])?;
    for &(x, f) in points {
        w.write_record([format_sig(x), format_sig(f)])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per `(window, lag)`.
pub fn write_acf_csv<W: Write>(out: W, estimates: &[&AcfEstimate<f64>]) -> Result<()> {
    let mut w = stamped(out, ACF_SCHEMA_LINE)?;
    w.write_record(["window", "lag", "acf"])?;
    for a in estimates {
        for (l, r) in a.autocorrelations.iter().enumerate() {
            w.write_record([a.lags.to_string(), (l + 1).to_string(), format_sig(*r)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let v: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let h = histogram(&v, 10).unwrap();
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 100);
        assert_eq!(h[9].upper, 1.0);
        assert!(histogram(&[1.0, 1.0], 3).is_err());
    }

    #[test]
    fn ecdf_ties() {
        assert_eq!(ecdf(&[2.0, 1.0, 2.0, 3.0]), vec![(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]);
    }

    #[test]
    fn alternating_flagged() {
        let v: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = diagnose_series(&v, 10).unwrap();
        assert!(d.acf_short.autocorrelations[0] < -0.95);
        assert!(d.flags.iter().any(|f| f.contains("alternation")));
        assert!(d.u_report.is_u);
    }

    #[test]
    fn csv_files_are_stamped() {
        let mut buf = Vec::new();
        write_ecdf_csv(&mut buf, &ecdf(&[1.0, 2.0])).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# densum-ecdf schema=1\nx,ecdf\n1,0.5\n2,1\n");
    }

    #[test]
    fn constant_rejected() {
        assert!(matches!(diagnose_series(&[2.0; 10], 5), Err(Error::Degenerate(_))));
    }
}
