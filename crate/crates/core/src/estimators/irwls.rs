use serde::{Deserialize, Serialize};

use super::{check_response, RegressionFit};
use crate::error::{invalid, Error, Result};
use crate::linalg::{householder_qr, least_squares_weights, Matrix};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Gaussian mean, identity link.
    Identity,
    /// Bernoulli mean, logit link.
    Logit,
    /// Poisson mean, log link.
    Log,
}

impl Link {
    fn inverse<T: Real>(self, eta: T) -> T {
        match self {
            Link::Identity => eta,
            Link::Logit => T::one() / (T::one() + (-eta).exp()),
            Link::Log => eta.exp(),
        }
    }

    fn link<T: Real>(self, mu: T) -> T {
        match self {
            Link::Identity => mu,
            Link::Logit => (mu / (T::one() - mu)).ln(),
            Link::Log => mu.ln(),
        }
    }

    /// `d mu / d eta`.
    fn mu_eta<T: Real>(self, eta: T) -> T {
        match self {
            Link::Identity => T::one(),
            Link::Logit => {
                let m = self.inverse(eta);
                m * (T::one() - m)
            }
            Link::Log => eta.exp(),
        }
    }

    /// Variance function of the canonical family.
    fn variance<T: Real>(self, mu: T) -> T {
        match self {
            Link::Identity => T::one(),
            Link::Logit => mu * (T::one() - mu),
            Link::Log => mu,
        }
    }

    fn initial_mean<T: Real>(self, y: T) -> T {
        match self {
            Link::Identity => y,
            Link::Logit => (y + lit(0.5)) / lit(2.0),
            Link::Log => y + lit(0.1),
        }
    }
}

/// IRWLS fit. `fit.weight_rows` holds `(X^T D X)^-1 X^T D` at convergence,
/// so `fit.coefficients = fit.weight_rows * z` for the final working response `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrwlsFit<T> {
    pub fit: RegressionFit<T>,
    pub link: Link,
    pub iterations: usize,
    /// Maximum absolute coefficient change at each iteration after the first.
    pub trace: Vec<T>,
    /// Working weights `D` at convergence.
    pub working_weights: Vec<T>,
}

/// Linear predictor magnitude beyond which fitted probabilities are treated as 0 or 1.
const SEPARATION_ETA: f64 = 30.0;

/// Iteratively re-weighted least squares for a canonical-link GLM. Stops when
/// the largest absolute coefficient change falls below `tol`.
pub fn irwls_fit<T: Real>(x: &Matrix<T>, y: &[T], link: Link, tol: T, max_iter: usize) -> Result<IrwlsFit<T>> {
    check_response(x, y)?;
    if max_iter == 0 {
        return Err(invalid("max_iter must be at least 1"));
    }
    match link {
        Link::Logit if y.iter().any(|&v| v < T::zero() || v > T::one()) => {
            return Err(invalid("logit link needs responses in [0, 1]"));
        }
        Link::Log if y.iter().any(|&v| v < T::zero()) => {
            return Err(invalid("log link needs nonnegative responses"));
        }
        _ => {}
    }
    let (n, p) = (x.rows(), x.cols());
    let mut eta: Vec<T> = y.iter().map(|&v| link.link(link.initial_mean(v))).collect();
    let mut beta: Option<Vec<T>> = None;
    let mut trace = Vec::new();
    let mut last_change = T::infinity();
    for iter in 1..=max_iter {
        let mut d = vec![T::zero(); n];
        let mut z = vec![T::zero(); n];
        for i in 0..n {
            let mu = link.inverse(eta[i]);
            let g = link.mu_eta(eta[i]);
            d[i] = g * g / link.variance(mu);
            z[i] = eta[i] + (y[i] - mu) / g;
        }
        let sqrt_d: Vec<T> = d.iter().map(|v| v.sqrt()).collect();
        let xw = Matrix::from_fn(n, p, |i, j| sqrt_d[i] * x[(i, j)]);
        let qr = householder_qr(&xw)?;
        let mut w = least_squares_weights(&qr);
        for s in 0..p {
            for (i, v) in w.row_mut(s).iter_mut().enumerate() {
                *v = *v * sqrt_d[i];
            }
        }
        let next = w.matvec(&z)?;
        if next.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("coefficients at iteration {iter}"),
            });
        }
        eta = x.matvec(&next)?;
        if link == Link::Logit && eta.iter().any(|e| e.abs() > lit(SEPARATION_ETA)) {
            return Err(Error::Separation { iteration: iter });
        }
        let done = match &beta {
            None => link == Link::Identity,
            Some(prev) => {
                last_change = prev
                    .iter()
                    .zip(&next)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), T::max);
                trace.push(last_change);
                last_change < tol
            }
        };
        beta = Some(next);
        if done {
            let coefficients = beta.expect("set above");
            let fitted: Vec<T> = eta.iter().map(|&e| link.inverse(e)).collect();
            let residuals = y.iter().zip(&fitted).map(|(&a, &b)| a - b).collect();
            let working_weights = eta
                .iter()
                .map(|&e| {
                    let g = link.mu_eta(e);
                    g * g / link.variance(link.inverse(e))
                })
                .collect();
            return Ok(IrwlsFit {
                fit: RegressionFit {
                    design: x.clone(),
                    response: y.to_vec(),
                    coefficients,
                    weight_rows: w,
                    fitted,
                    residuals,
                },
                link,
                iterations: iter,
                trace,
                working_weights,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_change: to_f64(last_change),
    })
}
