//! Additive estimators with explicit weight rows, and their variance estimators.

mod acf;
mod cluster;
mod gee;
mod irwls;

pub use acf::{acf, acf_phi_hat, lag_windows, AcfEstimate};
pub use cluster::{
    cluster_robust, partition_compare, residual_range, ClusterVarianceEstimate, PartitionComparison,
    ResidualRange,
};
pub(crate) use cluster::range_of;
pub use gee::{gee_exchangeable_wald, GeeFit};
pub use irwls::{irwls_fit, IrwlsFit, Link};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, least_squares_weights, Matrix};
use crate::scalar::Real;

/// A fitted linear estimator `B = W y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit<T> {
    pub design: Matrix<T>,
    pub response: Vec<T>,
    pub coefficients: Vec<T>,
    /// `p x n`; row `s` holds the weights of coefficient `s`.
    pub weight_rows: Matrix<T>,
    pub fitted: Vec<T>,
    pub residuals: Vec<T>,
}

impl<T: Real> RegressionFit<T> {
    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn p(&self) -> usize {
        self.design.cols()
    }

    /// `W_si e_i` for coefficient `s`.
    pub fn weighted_residuals(&self, s: usize) -> Vec<T> {
        self.weight_rows
            .row(s)
            .iter()
            .zip(&self.residuals)
            .map(|(&w, &e)| w * e)
            .collect()
    }

    pub fn sum_w2(&self, s: usize) -> T {
        self.weight_rows.row(s).iter().map(|&w| w * w).sum()
    }
}

pub(crate) fn check_response<T: Real>(x: &Matrix<T>, y: &[T]) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} design rows",
            y.len(),
            x.rows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "response".into() });
    }
    Ok(())
}

/// Ordinary least squares through a Householder QR of `X`.
pub fn ols_fit<T: Real>(x: &Matrix<T>, y: &[T]) -> Result<RegressionFit<T>> {
    check_response(x, y)?;
    let qr = householder_qr(x)?;
    let w = least_squares_weights(&qr);
    let coefficients = w.matvec(y)?;
    let fitted = x.matvec(&coefficients)?;
    let residuals = y.iter().zip(&fitted).map(|(&a, &b)| a - b).collect();
    Ok(RegressionFit {
        design: x.clone(),
        response: y.to_vec(),
        coefficients,
        weight_rows: w,
        fitted,
        residuals,
    })
}

/// `sum_i W_si W_ti e_i^2`.
pub fn meat_estimator<T: Real>(fit: &RegressionFit<T>, s: usize, t: usize) -> T {
    fit.weight_rows
        .row(s)
        .iter()
        .zip(fit.weight_rows.row(t))
        .zip(&fit.residuals)
        .map(|((&a, &b), &e)| a * b * e * e)
        .sum()
}
