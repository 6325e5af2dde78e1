//! Variance identities for weighted sums under summarized dependence.
//!
//! With `mu = 2|L| / n` the mean degree of the dependency graph and
//! `sigma_bar` the average covariance over its edges, the variance of a
//! weighted sum is the independence variance plus `n * mu * sigma_bar`, or
//! equivalently the independence variance times `1 + mu * phi`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{spd_inverse, Matrix};
use crate::model::{DependencySummary, GraphKind, WeightMatrix};
use crate::scalar::{count, lit, Real};

/// Relative threshold below which an off-diagonal covariance is treated as zero.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Decomposition of `Var(w Y)` into its independence part and the
/// contribution of the dependency graph. All matrices are `p x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceDecomposition<T> {
    /// `sum_i w_si w_ti sigma_i^2`.
    pub naive: Matrix<T>,
    /// `1 + mu * phi_st`. NaN where the naive cell is zero and `phi` is undefined.
    pub inflation: Matrix<T>,
    /// Average covariance over edges, `sigma_bar_st`.
    pub avg_cov: Matrix<T>,
    pub total: Matrix<T>,
    pub mu: T,
    pub n: usize,
}

impl<T: Real> VarianceDecomposition<T> {
    /// `(n^-1 naive)^-1 C`, the matrix analogue of the Moulton factor.
    pub fn moulton(&self) -> Result<Matrix<T>> {
        let scaled = self.naive.map(|v| v / count(self.n));
        spd_inverse(&scaled)?.matmul(&self.avg_cov)
    }
}

/// How the second summary constant is supplied to [`additive_variance`].
#[derive(Debug, Clone, PartialEq)]
pub enum AverageDependence<T> {
    SigmaBar(Matrix<T>),
    Phi(Matrix<T>),
}

fn naive_variance<T: Real>(w: &WeightMatrix<T>, var_diag: &[T]) -> Result<Matrix<T>> {
    let n = w.observations();
    if var_diag.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} variances for {n} observations",
            var_diag.len()
        )));
    }
    if let Some(i) = var_diag.iter().position(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(invalid(format!("variance {i} must be finite and nonnegative")));
    }
    let p = w.statistics();
    Ok(Matrix::from_fn(p, p, |s, t| {
        w.row(s)
            .iter()
            .zip(w.row(t))
            .zip(var_diag)
            .map(|((&a, &b), &v)| a * b * v)
            .sum()
    }))
}

/// Exact variance of `w Y` from per-variable variances and the summary
/// constants `(mu, sigma_bar)` or `(mu, phi)`.
pub fn additive_variance<T: Real>(
    w: &WeightMatrix<T>,
    var_diag: &[T],
    mu: T,
    dependence: &AverageDependence<T>,
) -> Result<VarianceDecomposition<T>> {
    let n = w.observations();
    let p = w.statistics();
    if !(mu >= T::zero()) || !mu.is_finite() {
        return Err(invalid(format!("mean degree must be finite and >= 0, got {mu}")));
    }
    let naive = naive_variance(w, var_diag)?;
    let nt: T = count(n);
    let given = match dependence {
        AverageDependence::SigmaBar(m) | AverageDependence::Phi(m) => m,
    };
    if given.rows() != p || given.cols() != p {
        return Err(Error::DimensionMismatch(format!(
            "summary matrix is {}x{}, expected {p}x{p}",
            given.rows(),
            given.cols()
        )));
    }
    let (avg_cov, phi) = match dependence {
        AverageDependence::SigmaBar(sb) => {
            let phi = Matrix::from_fn(p, p, |s, t| phi_from(sb[(s, t)], naive[(s, t)], nt));
            (sb.clone(), phi)
        }
        AverageDependence::Phi(phi) => {
            let sb = Matrix::from_fn(p, p, |s, t| phi[(s, t)] * naive[(s, t)] / nt);
            (sb, phi.clone())
        }
    };
    for s in 0..p {
        let g = T::one() + mu * phi[(s, s)];
        if g < T::zero() {
            return Err(Error::InconsistentSummary(format!(
                "1 + mu*phi = {g} < 0 for statistic {s}"
            )));
        }
    }
    let inflation = phi.map(|f| T::one() + mu * f);
    let total = Matrix::from_fn(p, p, |s, t| naive[(s, t)] + nt * mu * avg_cov[(s, t)]);
    Ok(VarianceDecomposition {
        naive,
        inflation,
        avg_cov,
        total,
        mu,
        n,
    })
}

/// Same as [`additive_variance`] with the constants taken from a summary.
pub fn additive_variance_from_summary<T: Real>(
    w: &WeightMatrix<T>,
    var_diag: &[T],
    summary: &DependencySummary<T>,
) -> Result<VarianceDecomposition<T>> {
    additive_variance(w, var_diag, summary.mu, &AverageDependence::SigmaBar(summary.sigma_bar.clone()))
}

fn phi_from<T: Real>(sigma_bar: T, naive: T, n: T) -> T {
    if naive == T::zero() {
        if sigma_bar == T::zero() {
            T::zero()
        } else {
            T::nan()
        }
    } else {
        sigma_bar / (naive / n)
    }
}

/// Extracts the linear dependency graph from a full covariance matrix and
/// returns `(mu, phi, sigma_bar)` for every pair of weight rows.
///
/// `sigma_bar_st = (2|L|)^-1 sum over ordered edges (i, j) of w_si w_tj sigma_ij`,
/// which for `s = t` is the average over unordered edges of `w_i w_j sigma_ij`.
pub fn summaries_from_covariance<T: Real>(cov: &Matrix<T>, w: &WeightMatrix<T>) -> Result<DependencySummary<T>> {
    let n = w.observations();
    if cov.rows() != n || cov.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, weights have {n} columns",
            cov.rows(),
            cov.cols()
        )));
    }
    if !cov.is_finite() {
        return Err(Error::NonFinite {
            what: "covariance matrix".into(),
        });
    }
    let scale = cov.max_abs();
    if cov.asymmetry().unwrap_or(T::zero()) > lit::<T>(1e-12) * scale.max(T::min_positive_value()) {
        return Err(invalid("covariance matrix is not symmetric"));
    }
    let threshold = lit::<T>(EDGE_TOLERANCE) * scale;
    let edges = edge_list(cov, threshold);
    let degree_sum = 2 * edges.len();
    let p = w.statistics();
    let var_diag: Vec<T> = (0..n).map(|i| cov[(i, i)]).collect();
    let naive = naive_variance(w, &var_diag)?;
    let nt: T = count(n);
    let (mu, sigma_bar) = if edges.is_empty() {
        (T::zero(), Matrix::zeros(p, p))
    } else {
        let ordered: T = count(degree_sum);
        let sb = Matrix::from_fn(p, p, |s, t| {
            let (ws, wt) = (w.row(s), w.row(t));
            edges
                .iter()
                .map(|&(i, j)| (ws[i] * wt[j] + ws[j] * wt[i]) * cov[(i, j)])
                .sum::<T>()
                / ordered
        });
        (ordered / nt, sb)
    };
    let phi = Matrix::from_fn(p, p, |s, t| phi_from(sigma_bar[(s, t)], naive[(s, t)], nt));
    Ok(DependencySummary {
        mu,
        phi,
        sigma_bar,
        graph_kind: GraphKind::Linear,
    })
}

/// Unordered edges `(i, j)`, `i < j`, with `|sigma_ij| > threshold`.
pub fn edge_list<T: Real>(cov: &Matrix<T>, threshold: T) -> Vec<(usize, usize)> {
    let n = cov.rows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if cov[(i, j)].abs() > threshold {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Vertex degrees of the graph returned by [`edge_list`].
pub fn degrees(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut d = vec![0; n];
    for &(i, j) in edges {
        d[i] += 1;
        d[j] += 1;
    }
    d
}

/// Range `[-1/mu, (n-1)/mu]` of the average correlation of an unweighted sum.
pub fn phi_bounds<T: Real>(mu: T, n: usize) -> Result<(T, T)> {
    if !(mu > T::zero()) {
        return Err(invalid(format!("phi bounds need mu > 0, got {mu}")));
    }
    if n < 2 {
        return Err(invalid("phi bounds need n >= 2"));
    }
    Ok((-T::one() / mu, count::<T>(n - 1) / mu))
}

/// [`phi_bounds`] for a weighted statistic. Only constant weights are supported;
/// the bound is not established for general weights.
pub fn phi_bounds_weighted<T: Real>(mu: T, w: &[T]) -> Result<(T, T)> {
    match w.first() {
        Some(&w0) if w.iter().all(|&x| x == w0) => phi_bounds(mu, w.len()),
        Some(_) => Err(Error::Unsupported(
            "phi bounds are only available for equally weighted sums".into(),
        )),
        None => Err(Error::InsufficientData("empty weight row".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaBound<T> {
    /// Maximum variance over mean variance.
    pub eta: T,
    /// `1 + mu * eta`.
    pub factor: T,
    /// `(1 + mu * eta) * sum sigma_i^2`, an upper bound on the variance of the sum.
    pub variance_bound: T,
}

pub fn eta_bound<T: Real>(variances: &[T], mu: T) -> Result<EtaBound<T>> {
    if variances.is_empty() {
        return Err(Error::InsufficientData("no variances".into()));
    }
    if variances.iter().any(|v| !(*v >= T::zero())) {
        return Err(invalid("variances must be nonnegative"));
    }
    let total: T = variances.iter().copied().sum();
    if total == T::zero() {
        return Err(Error::Degenerate("all variances are zero".into()));
    }
    let mean = total / count(variances.len());
    let max = variances.iter().copied().fold(T::zero(), T::max);
    let eta = max / mean;
    let factor = T::one() + mu * eta;
    Ok(EtaBound {
        eta,
        factor,
        variance_bound: factor * total,
    })
}

/// Variance of a sum of cluster statistics `T_k` (each `q`-dimensional).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterVarianceSummary<T> {
    pub cluster_variances: Vec<Matrix<T>>,
    pub mu_t: T,
    pub sigma_bar_t: Matrix<T>,
    pub total: Matrix<T>,
}

/// `total = sum_k Var(T_k) + K mu_T sigma_bar_T`.
pub fn cluster_variance_identity<T: Real>(
    cluster_variances: Vec<Matrix<T>>,
    mu_t: T,
    sigma_bar_t: Matrix<T>,
) -> Result<ClusterVarianceSummary<T>> {
    let k = cluster_variances.len();
    if k == 0 {
        return Err(Error::InsufficientData("no clusters".into()));
    }
    let q = sigma_bar_t.rows();
    if !sigma_bar_t.is_square() || cluster_variances.iter().any(|v| v.rows() != q || v.cols() != q) {
        return Err(Error::DimensionMismatch(format!(
            "cluster variances and sigma_bar must all be {q}x{q}"
        )));
    }
    let kt: T = count(k);
    let total = Matrix::from_fn(q, q, |a, b| {
        cluster_variances.iter().map(|v| v[(a, b)]).sum::<T>() + kt * mu_t * sigma_bar_t[(a, b)]
    });
    Ok(ClusterVarianceSummary {
        cluster_variances,
        mu_t,
        sigma_bar_t,
        total,
    })
}
