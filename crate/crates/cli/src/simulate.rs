use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use densum::simulation::{
    format_sig, run_mean_cell, run_table3_cell, write_reports, CoverageReport, MeanCell, RegressionCell,
    SimulationConfig,
};

use crate::CommonArgs;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Which experiment: 1 (mean coverage), 2 (Beta shapes), 3 (regression).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    table: u8,
    #[arg(long)]
    n: Option<usize>,
    /// Exchangeable correlation (tables 1 and 2).
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Target average correlation of the regression errors (table 3).
    #[arg(long, allow_hyphen_values = true)]
    phi_star: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Results CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

fn apply_overrides(cfg: &mut SimulationConfig, a: &SimulateArgs) -> Result<()> {
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    match a.table {
        1 => {
            if a.phi_star.is_some() {
                bail!("--phi-star applies to table 3; use --phi");
            }
            cfg.table1.cells = match (a.n, a.phi) {
                (Some(n), Some(phi)) => vec![(n, phi)],
                (n, phi) => {
                    let cells: Vec<_> = cfg
                        .table1
                        .cells
                        .iter()
                        .copied()
                        .filter(|&(cn, cp)| n.is_none_or(|n| n == cn) && phi.is_none_or(|p| p == cp))
                        .collect();
                    if cells.is_empty() {
                        bail!("no table 1 cell matches the given --n/--phi; pass both to run a new cell");
                    }
                    cells
                }
            };
        }
        2 => {
            if a.phi_star.is_some() {
                bail!("--phi-star applies to table 3; use --phi");
            }
            if let Some(n) = a.n {
                cfg.table2.n = n;
            }
            if let Some(phi) = a.phi {
                cfg.table2.phi = phi;
            }
        }
        _ => {
            if a.phi.is_some() {
                bail!("table 3 is indexed by --phi-star");
            }
            if let Some(n) = a.n {
                cfg.table3.ns = vec![n];
            }
            if let Some(p) = a.phi_star {
                cfg.table3.phi_stars = vec![p];
            }
        }
    }
    cfg.validate().context("invalid settings")?;
    Ok(())
}

fn progress(r: &CoverageReport, started: Instant) {
    let what = match (r.table, r.coefficient, r.alpha_shape) {
        (3, Some(k), _) => format!("table 3 n={} phi*={} b{k}", r.n, format_sig(r.phi)),
        (2, _, Some(shape)) => format!("table 2 n={} phi={} shape={}", r.n, format_sig(r.phi), format_sig(shape)),
        _ => format!("table {} n={} phi={}", r.table, r.n, format_sig(r.phi)),
    };
    let plug = r.ci_r.map(|c| format!(" ci_r {c:.3}")).unwrap_or_default();
    eprintln!(
        "{what}: ci_u {:.3} wald {:.3}{plug} verdict {} [{:.1}s]",
        r.ci_u,
        r.ci_wald,
        r.verdict.symbol(),
        started.elapsed().as_secs_f64()
    );
}

pub fn run(a: SimulateArgs) -> Result<()> {
    let (mut cfg, _) = a.common.load()?;
    apply_overrides(&mut cfg, &a)?;
    let started = Instant::now();
    let mut reports = Vec::new();
    let mut push = |r: CoverageReport| {
        progress(&r, started);
        reports.push(r);
    };
    match a.table {
        1 => {
            for &(n, phi) in &cfg.table1.cells {
                push(run_mean_cell(&MeanCell {
                    table: 1,
                    n,
                    phi,
                    shape: cfg.table1.shape,
                    reps: cfg.reps,
                    alpha: cfg.alpha,
                    c_star: cfg.table1.c_star,
                    seed: cfg.seed,
                })?);
            }
        }
        2 => {
            for &shape in &cfg.table2.shapes {
                push(run_mean_cell(&MeanCell {
                    table: 2,
                    n: cfg.table2.n,
                    phi: cfg.table2.phi,
                    shape,
                    reps: cfg.reps,
                    alpha: cfg.alpha,
                    c_star: cfg.table2.c_star,
                    seed: cfg.seed,
                })?);
            }
        }
        _ => {
            for (n, phi_star) in cfg.table3.cells() {
                let [b0, b1] = run_table3_cell(&RegressionCell {
                    n,
                    phi_star,
                    reps: cfg.reps,
                    alpha: cfg.alpha,
                    c_star: cfg.table3.c_star,
                    seed: cfg.seed,
                    plug_in: cfg.table3.plug_in,
                })?;
                push(b0);
                push(b1);
            }
        }
    }
    match &a.out {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_reports(std::io::BufWriter::new(f), &reports)?;
            eprintln!("wrote {} rows to {}", reports.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_reports(&mut lock, &reports)?;
            lock.flush()?;
        }
    }
    Ok(())
}
