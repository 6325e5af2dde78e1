use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{count, Real};

/// Sample autocorrelations at lags `1..=max_lag`, normalized by the lag-0 sum
/// of squares (the usual biased estimator).
pub fn acf<T: Real>(series: &[T], max_lag: usize) -> Result<Vec<T>> {
    let n = series.len();
    if max_lag == 0 || max_lag >= n {
        return Err(invalid(format!("lag count must be in 1..{n}, got {max_lag}")));
    }
    let mean = series.iter().copied().sum::<T>() / count(n);
    let c: Vec<T> = series.iter().map(|&v| v - mean).collect();
    let c0: T = c.iter().map(|&v| v * v).sum();
    if c0 == T::zero() {
        return Err(Error::Degenerate("constant series has no autocorrelation".into()));
    }
    Ok((1..=max_lag)
        .map(|l| c.iter().zip(&c[l..]).map(|(&a, &b)| a * b).sum::<T>() / c0)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfEstimate<T> {
    pub lags: usize,
    pub autocorrelations: Vec<T>,
    /// Unweighted mean of the autocorrelations.
    pub phi_hat: T,
}

pub fn acf_phi_hat<T: Real>(series: &[T], lags: usize) -> Result<AcfEstimate<T>> {
    let r = acf(series, lags)?;
    let phi_hat = r.iter().copied().sum::<T>() / count(lags);
    Ok(AcfEstimate {
        lags,
        autocorrelations: r,
        phi_hat,
    })
}

/// The short and long lag windows `(floor(10 log10 n), floor((n - 1) / 2))`.
pub fn lag_windows(n: usize) -> (usize, usize) {
    let short = (10.0 * (n as f64).log10()).floor() as usize;
    (short.min(n.saturating_sub(1)), (n.saturating_sub(1)) / 2)
}
