use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use densum::concentration::{ci_mean, MeanMethod};
use densum::estimators::ols_fit;
use densum::model::{summarize, ConfidenceSet, Partition, RangeSource};
use densum::pipeline::{
    climate_prepare, diagnose_series, ecdf, fit_analysis, read_climate_csv, sha256_hex, write_acf_csv,
    write_ecdf_csv, write_histogram_csv, AnalysisOptions, DiagnoseReport, ModelFrame, Provenance, RangeChoice,
    Table, Unit,
};
use densum::simulation::format_sig;
use serde::{Deserialize, Serialize};

use crate::{parse_range, CommonArgs, MethodArg};

fn read_input(path: &Path) -> Result<Table> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Table::read(f).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if path == Path::new("-") {
        println!("{text}");
    } else {
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct CiArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: String,
    /// known=R, residual (observed range), two-mean or marginal=R.
    #[arg(long, value_parser = parse_range, default_value = "residual")]
    range: RangeChoice,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::U)]
    method: MethodArg,
    /// Write the result as JSON ("-" for standard output).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiOutput {
    pub column: String,
    pub n: usize,
    pub mean: f64,
    /// Range used by the bound; absent for the range-free methods.
    pub range: Option<f64>,
    pub confidence_set: ConfidenceSet<f64>,
    pub warnings: Vec<String>,
}

pub fn ci(a: CiArgs) -> Result<()> {
    let table = read_input(&a.input)?;
    let y = table.numeric_column(&a.column)?;
    let s = summarize(&y)?;
    let method = MeanMethod::from(a.method);
    let range_free = matches!(method, MeanMethod::Ratio | MeanMethod::Wald);
    let (r, source) = match a.range {
        RangeChoice::Known(r) => (r, RangeSource::Known),
        RangeChoice::Marginal(r) => (r, RangeSource::MarginalRange),
        RangeChoice::Residual => (s.range, RangeSource::ResidualRange),
        RangeChoice::TwoMean => {
            if s.min < 0.0 {
                bail!("two-mean range needs nonnegative values; column '{}' has minimum {}", a.column, s.min);
            }
            (2.0 * s.mean, RangeSource::TwoMean)
        }
    };
    let mut warnings = Vec::new();
    if s.range == 0.0 {
        warnings.push(format!("column '{}' is constant", a.column));
    }
    if !range_free && (s.min < s.mean - r || s.max > s.mean + r) {
        warnings.push(format!("observed range {} exceeds the range used, {}", format_sig(s.range), format_sig(r)));
    }
    let mut cs = ci_mean(&s, r, a.alpha, method)?;
    if method != MeanMethod::Ratio {
        cs.range_source = source;
    }
    for w in &warnings {
        log::warn!("{w}");
        eprintln!("warning: {w}");
    }
    let out = CiOutput {
        column: a.column,
        n: s.n,
        mean: s.mean,
        range: (!range_free).then_some(r),
        confidence_set: cs,
        warnings,
    };
    let method_name = serde_json::to_value(cs.method)?;
    let source_name = serde_json::to_value(cs.range_source)?;
    println!(
        "{}: n = {}, mean {} [{}, {}] at level {} ({}, range {})",
        out.column,
        out.n,
        format_sig(out.mean),
        format_sig(cs.lower),
        format_sig(cs.upper),
        format_sig(cs.level),
        method_name.as_str().unwrap_or("?"),
        source_name.as_str().unwrap_or("?"),
    );
    if let Some(path) = &a.json {
        write_json(path, &out)?;
    }
    Ok(())
}

/// Model columns: either a plain table or climate rows turned into the lagged frame.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Response column (defaults to [analysis].response in the config).
    #[arg(long)]
    response: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long)]
    no_intercept: bool,
    /// Treat the input as date,temp,co2,index rows and build the lagged climate frame.
    #[arg(long, value_enum)]
    climate: Option<UnitArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum UnitArg {
    Monthly,
    Yearly,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Monthly => Unit::Monthly,
            UnitArg::Yearly => Unit::Yearly,
        }
    }
}

impl ModelArgs {
    /// The frame and the SHA-256 of the input file.
    fn frame(&self, defaults: &densum::simulation::AnalysisConfig) -> Result<(ModelFrame, String)> {
        let bytes = std::fs::read(&self.input).with_context(|| format!("reading {}", self.input.display()))?;
        let hash = sha256_hex(&bytes);
        if let Some(unit) = self.climate {
            let rows = read_climate_csv(bytes.as_slice()).with_context(|| format!("parsing {}", self.input.display()))?;
            let mut frame = climate_prepare(&rows, unit.into())?;
            if !self.covariates.is_empty() {
                for c in &self.covariates {
                    if !frame.covariate_names.contains(c) {
                        bail!("no climate covariate '{c}' (available: {})", frame.covariate_names.join(", "));
                    }
                }
                while let Some(j) = frame.covariate_names.iter().position(|c| !self.covariates.contains(c)) {
                    frame = frame.without(j);
                }
            }
            frame.intercept = !self.no_intercept;
            return Ok((frame, hash));
        }
        let table = Table::read(bytes.as_slice()).with_context(|| format!("parsing {}", self.input.display()))?;
        let response = match (&self.response, &defaults.response) {
            (Some(r), _) | (None, Some(r)) => r.clone(),
            (None, None) => bail!("no response column: pass --response or set [analysis].response"),
        };
        let covariates = if self.covariates.is_empty() {
            defaults.covariates.clone()
        } else {
            self.covariates.clone()
        };
        let frame = ModelFrame::from_table(&table, &response, &covariates, !self.no_intercept)?;
        Ok((frame, hash))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    alpha: Option<f64>,
    /// known=R, residual, two-mean or marginal=R.
    #[arg(long, value_parser = parse_range, default_value = "residual")]
    range: RangeChoice,
    /// Candidate partition NAME=K: K contiguous clusters of near-equal size. Repeatable.
    #[arg(long = "partition", value_parser = parse_partition)]
    partitions: Vec<(String, usize)>,
    /// Refit without each covariate and report the coefficient changes.
    #[arg(long)]
    screen: bool,
    /// Write the report as JSON ("-" for standard output instead of text).
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

fn parse_partition(s: &str) -> Result<(String, usize)> {
    let (name, k) = s.split_once('=').with_context(|| format!("expected NAME=K, got '{s}'"))?;
    let k: usize = k.parse().with_context(|| format!("'{k}' is not a cluster count"))?;
    if name.is_empty() || k == 0 {
        bail!("expected NAME=K with K >= 1, got '{s}'");
    }
    Ok((name.to_string(), k))
}

pub fn fit(a: FitArgs) -> Result<()> {
    if a.partitions.len() == 1 {
        bail!("partition comparison needs at least two --partition values");
    }
    let (cfg, config_text) = a.common.load()?;
    let (frame, hash) = a.model.frame(&cfg.analysis)?;
    let partitions = a
        .partitions
        .iter()
        .map(|(name, k)| {
            let p = Partition::sequential(frame.n(), *k).with_context(|| format!("partition '{name}'"))?;
            Ok((name.clone(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    let options = AnalysisOptions {
        alpha: a.alpha.unwrap_or(cfg.analysis.alpha),
        range: a.range,
        partitions,
        covariate_screen: a.screen,
    };
    let provenance = Provenance {
        input_sha256: Some(hash),
        seed: cfg.seed,
        config: config_text,
    };
    let report = fit_analysis(&frame, &options, provenance)?;
    match &a.json {
        Some(p) if p == Path::new("-") => write_json(p, &report)?,
        Some(p) => {
            print!("{report}");
            write_json(p, &report)?;
        }
        None => print!("{report}"),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Series to diagnose; without it the weighted residuals of --coefficient are used.
    #[arg(long, conflicts_with = "coefficient")]
    column: Option<String>,
    /// Coefficient whose weighted-residual series W_s e is diagnosed.
    #[arg(long)]
    coefficient: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
    /// Directory for histogram.csv, ecdf.csv and acf.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the report as JSON ("-" for standard output).
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

fn series(a: &DiagnoseArgs, cfg: &densum::simulation::AnalysisConfig) -> Result<(String, Vec<f64>)> {
    if let Some(col) = &a.column {
        let table = read_input(&a.model.input)?;
        return Ok((col.clone(), table.numeric_column(col)?));
    }
    let Some(name) = &a.coefficient else {
        bail!("pass --column, or a model with --coefficient");
    };
    let (frame, _) = a.model.frame(cfg)?;
    let names = frame.column_names();
    let s = names
        .iter()
        .position(|c| c == name)
        .with_context(|| format!("no coefficient '{name}' (model has: {})", names.join(", ")))?;
    let fit = ols_fit(&frame.design(), &frame.response).context("fitting the model")?;
    Ok((format!("weighted residuals of {name}"), fit.weighted_residuals(s)))
}

fn print_diagnose(what: &str, d: &DiagnoseReport) {
    let u = &d.u_report;
    println!("{what}: n = {}", d.n);
    println!(
        "  mean {} vs midpoint {}: {}",
        format_sig(u.expected_value),
        format_sig(u.midpoint),
        if u.is_u { "U" } else { "not U" }
    );
    println!("  rule-of-thumb bound on phi: {}", format_sig(d.rule_of_thumb));
    for acf in [&d.acf_short, &d.acf_long] {
        println!("  phi_hat over {} lags: {}", acf.lags, format_sig(acf.phi_hat));
    }
    for f in &d.flags {
        println!("  flag: {f}");
    }
}

pub fn diagnose(a: DiagnoseArgs) -> Result<()> {
    let (cfg, _) = a.common.load()?;
    let (what, values) = series(&a, &cfg.analysis)?;
    let report = diagnose_series(&values, a.bins.unwrap_or(cfg.analysis.histogram_bins))?;
    print_diagnose(&what, &report);
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let create = |name: &str| {
            let p = dir.join(name);
            std::fs::File::create(&p).with_context(|| format!("creating {}", p.display()))
        };
        write_histogram_csv(create("histogram.csv")?, &report.histogram)?;
        write_ecdf_csv(create("ecdf.csv")?, &ecdf(&values))?;
        write_acf_csv(create("acf.csv")?, &[&report.acf_short, &report.acf_long])?;
    }
    if let Some(path) = &a.json {
        write_json(path, &report)?;
    }
    Ok(())
}
