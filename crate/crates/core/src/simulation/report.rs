use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::concentration::A5Verdict;
use crate::error::Result;

/// First line of every results CSV.
pub const CSV_SCHEMA_LINE: &str = "# densum-simulate schema=1";

const HEADER: [&str; 17] = [
    "table",
    "coefficient",
    "n",
    "phi",
    "alpha_shape",
    "threshold",
    "mean_lower",
    "mean_upper",
    "ci_wald",
    "ci_u",
    "ci_r",
    "a_hat",
    "av_star",
    "a_hat_row1",
    "verdict",
    "seed",
    "repair_lambda",
];

/// One row of a coverage table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub table: u8,
    /// Coefficient index for regression tables.
    pub coefficient: Option<usize>,
    pub n: usize,
    /// `phi` for the mean tables, `phi*` for the regression table.
    pub phi: f64,
    pub alpha_shape: Option<f64>,
    pub threshold: Option<f64>,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub ci_wald: f64,
    pub ci_u: f64,
    pub ci_r: Option<f64>,
    pub a_hat: f64,
    pub av_star: f64,
    pub a_hat_se: f64,
    pub s_used: f64,
    pub verdict: A5Verdict,
    /// Regression tables: the exponential moment built from the first weight row only.
    pub a_hat_row1: Option<f64>,
    pub reps: usize,
    pub seed: u64,
    pub repair_lambda: f64,
}

/// Six significant digits, trailing zeros trimmed; scientific outside `[1e-5, 1e15)`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let rounded: f64 = sci.parse().expect("valid float");
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{rounded:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

/// Writes the schema line, header, and one row per report.
pub fn write_reports<W: Write>(mut out: W, reports: &[CoverageReport]) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in reports {
        w.write_record([
            r.table.to_string(),
            r.coefficient.map(|c| c.to_string()).unwrap_or_default(),
            r.n.to_string(),
            format_sig(r.phi),
            opt(r.alpha_shape),
            opt(r.threshold),
            format_sig(r.mean_lower),
            format_sig(r.mean_upper),
            format_sig(r.ci_wald),
            format_sig(r.ci_u),
            opt(r.ci_r),
            format_sig(r.a_hat),
            format_sig(r.av_star),
            opt(r.a_hat_row1),
            r.verdict.symbol().to_string(),
            r.seed.to_string(),
            format_sig(r.repair_lambda),
        ])?;
    }
    w.flush()?;
    Ok(())
}
