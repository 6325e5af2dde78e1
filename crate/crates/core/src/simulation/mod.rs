//! Gaussian-copula Monte Carlo coverage experiments.
//!
//! Every replication owns the random stream `(master_seed, replication)`,
//! so results do not depend on how replications are scheduled, and cells
//! that share a seed see common random numbers.

mod config;
mod copula;
mod experiments;
mod report;

pub use config::{AnalysisConfig, SimulationConfig, Table1Config, Table2Config, Table3Config};
pub use copula::{copula_draw, copula_sample, exchangeable_corr, table3_corr, CorrelationFactor};
pub use experiments::{
    run_mean_cell, run_table1, run_table2, run_table3, run_table3_cell, table3_design, MeanCell, PlugInRange, RegressionCell,
    DESIGN_STREAM_BASE, TABLE1_CELLS, TABLE2_SHAPES, TABLE3_BETA, TABLE3_NS, TABLE3_PHI_STARS,
};
pub use report::{format_sig, write_reports, CoverageReport, CSV_SCHEMA_LINE};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::special::{beta_quantile, std_normal_cdf, std_normal_pdf, truncnorm_quantile};

/// Bounded marginal distribution used by the copula sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MarginalSpec {
    Beta { a: f64, b: f64 },
    TruncNormal { mu: f64, sigma: f64, lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl MarginalSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MarginalSpec::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            MarginalSpec::TruncNormal { sigma, lo, hi, mu } => sigma > 0.0 && lo < hi && mu.is_finite(),
            MarginalSpec::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid marginal {self:?}")))
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            MarginalSpec::Beta { .. } => (0.0, 1.0),
            MarginalSpec::TruncNormal { lo, hi, .. } | MarginalSpec::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub fn range(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarginalSpec::Beta { a, b } => a / (a + b),
            MarginalSpec::TruncNormal { mu, sigma, lo, hi } => {
                let (al, be) = ((lo - mu) / sigma, (hi - mu) / sigma);
                let z = std_normal_cdf(be) - std_normal_cdf(al);
                mu + sigma * (std_normal_pdf(al) - std_normal_pdf(be)) / z
            }
            MarginalSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            MarginalSpec::Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            MarginalSpec::TruncNormal { mu, sigma, lo, hi } => {
                let (al, be) = ((lo - mu) / sigma, (hi - mu) / sigma);
                let z = std_normal_cdf(be) - std_normal_cdf(al);
                let (pa, pb) = (std_normal_pdf(al), std_normal_pdf(be));
                // x * pdf(x) is 0 at infinite bounds
                let term = |x: f64, p: f64| if x.is_finite() { x * p } else { 0.0 };
                let t1 = (term(al, pa) - term(be, pb)) / z;
                let t2 = (pa - pb) / z;
                sigma * sigma * (1.0 + t1 - t2 * t2)
            }
            MarginalSpec::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }

    /// Symmetric about the support midpoint, hence a U variable.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            MarginalSpec::Beta { a, b } => a == b,
            MarginalSpec::TruncNormal { mu, lo, hi, .. } => (mu - lo - (hi - mu)).abs() <= 1e-12 * (hi - lo),
            MarginalSpec::Uniform { .. } => true,
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        match *self {
            MarginalSpec::Beta { a, b } => beta_quantile(a, b, p),
            MarginalSpec::TruncNormal { mu, sigma, lo, hi } => truncnorm_quantile(mu, sigma, lo, hi, p),
            MarginalSpec::Uniform { lo, hi } => {
                crate::special::check_probability(p)?;
                Ok(lo + p * (hi - lo))
            }
        }
    }
}
