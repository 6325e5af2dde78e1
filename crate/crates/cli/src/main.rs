mod analyze;
mod climate;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use densum::concentration::MeanMethod;
use densum::pipeline::RangeChoice;
use densum::simulation::SimulationConfig;

/// Confidence sets and diagnostics for sums of dependent bounded variables.
#[derive(Debug, Parser)]
#[command(name = "densum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a coverage experiment and write one CSV row per cell.
    Simulate(simulate::SimulateArgs),
    /// Confidence set for the mean of one column.
    Ci(analyze::CiArgs),
    /// Least-squares fit with range-based confidence sets and diagnostics.
    Fit(analyze::FitArgs),
    /// U-class checks, histogram, ECDF and autocorrelations of a series.
    Diagnose(analyze::DiagnoseArgs),
    /// Build the lagged climate model frame.
    PrepareClimate(climate::PrepareArgs),
    /// Download the public monthly temperature and CO2 series.
    FetchClimate(climate::FetchArgs),
}

/// Flags shared by the commands that read a config file or carry a seed.
#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config with top-level keys and [table1]/[table2]/[table3]/[analysis] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; DENSUM_SEED overrides it when set.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self) -> Result<(SimulationConfig, Option<String>)> {
        let (mut cfg, text) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let cfg = SimulationConfig::from_toml_str(&text).with_context(|| format!("config {}", path.display()))?;
                (cfg, Some(text))
            }
            None => (SimulationConfig::default(), None),
        };
        if let Some(seed) = seed_override(self.seed)? {
            cfg.seed = seed;
        }
        Ok((cfg, text))
    }
}

fn seed_override(flag: Option<u64>) -> Result<Option<u64>> {
    match std::env::var("DENSUM_SEED") {
        Ok(v) if !v.trim().is_empty() => {
            let seed = v.trim().parse().with_context(|| format!("DENSUM_SEED='{v}' is not an unsigned integer"))?;
            Ok(Some(seed))
        }
        _ => Ok(flag),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Hoeffding,
    U,
    Bernstein,
    Wald,
    Ratio,
}

impl From<MethodArg> for MeanMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Hoeffding => MeanMethod::Hoeffding,
            MethodArg::U => MeanMethod::USharp,
            MethodArg::Bernstein => MeanMethod::Bernstein,
            MethodArg::Wald => MeanMethod::Wald,
            MethodArg::Ratio => MeanMethod::Ratio,
        }
    }
}

/// `known=R`, `residual`, `two-mean` or `marginal=R`.
fn parse_range(s: &str) -> Result<RangeChoice> {
    let positive = |v: &str| -> Result<f64> {
        let r: f64 = v.parse().with_context(|| format!("'{v}' is not a number"))?;
        if !(r > 0.0 && r.is_finite()) {
            bail!("range must be positive, got {r}");
        }
        Ok(r)
    };
    match s.split_once('=') {
        Some(("known", v)) => Ok(RangeChoice::Known(positive(v)?)),
        Some(("marginal", v)) => Ok(RangeChoice::Marginal(positive(v)?)),
        None if s == "residual" => Ok(RangeChoice::Residual),
        None if s == "two-mean" => Ok(RangeChoice::TwoMean),
        _ => bail!("expected known=R, residual, two-mean or marginal=R, got '{s}'"),
    }
}

/// Failure reaching a remote host; the process exits with code 2.
#[derive(Debug)]
struct NetworkError(String);

impl std::fmt::Display for NetworkError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "network error: {}", self.0)
    }
}

impl std::error::Error for NetworkError {}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Ci(a) => analyze::ci(a),
        Command::Fit(a) => analyze::fit(a),
        Command::Diagnose(a) => analyze::diagnose(a),
        Command::PrepareClimate(a) => climate::prepare(a),
        Command::FetchClimate(a) => climate::fetch(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<NetworkError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
