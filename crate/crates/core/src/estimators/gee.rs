use super::{check_response, ols_fit};
use crate::error::{invalid, Error, Result};
use crate::linalg::{spd_inverse, Matrix};
use crate::model::{CiMethod, ConfidenceSet, Partition, RangeSource};
use crate::scalar::{count, lit, Real};
use crate::special::std_normal_quantile;

/// Linear GEE fit with an exchangeable working correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeeFit<T> {
    pub coefficients: Vec<T>,
    /// Sandwich covariance `B^-1 M B^-1`.
    pub covariance: Matrix<T>,
    pub std_errors: Vec<T>,
    pub rho: T,
    pub scale: T,
    pub iterations: usize,
    pub intervals: Vec<ConfidenceSet<T>>,
}

const MAX_ITER: usize = 50;
const TOL: f64 = 1e-10;
const RHO_CEILING: f64 = 0.999;

/// `V_k^-1 v` for the exchangeable matrix `(1 - rho) I + rho 1 1^T` of size `len(v)`.
fn exch_solve<T: Real>(rho: T, v: &[T]) -> Vec<T> {
    let nk: T = count(v.len());
    let c = rho / (T::one() - rho + nk * rho);
    let total: T = v.iter().copied().sum();
    let scale = T::one() / (T::one() - rho);
    v.iter().map(|&x| scale * (x - c * total)).collect()
}

/// Wald intervals from a linear GEE sandwich with exchangeable working
/// correlation. `rho` is estimated from within-cluster residual cross-products.
pub fn gee_exchangeable_wald<T: Real>(x: &Matrix<T>, y: &[T], partition: &Partition, alpha: T) -> Result<GeeFit<T>> {
    check_response(x, y)?;
    if partition.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} observations, design has {}",
            partition.len(),
            x.rows()
        )));
    }
    if partition.clusters() < 2 {
        return Err(invalid("GEE sandwich needs at least two clusters"));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (n, p) = (x.rows(), x.cols());
    let members = partition.members();
    let max_size = members.iter().map(Vec::len).max().unwrap_or(1);
    let rho_floor = if max_size > 1 {
        -T::one() / count::<T>(max_size - 1) + lit(1e-6)
    } else {
        T::zero()
    };
    let pairs: usize = members.iter().map(|m| m.len() * (m.len() - 1) / 2).sum();

    let mut beta = ols_fit(x, y)?.coefficients;
    let mut rho = T::zero();
    let mut scale = T::one();
    let mut iterations = 0;
    let mut bread = Matrix::zeros(p, p);
    let mut residuals = vec![T::zero(); n];
    let xk_of = |m: &[usize]| -> Vec<Vec<T>> { (0..p).map(|j| m.iter().map(|&i| x[(i, j)]).collect()).collect() };
    let cluster_cols: Vec<Vec<Vec<T>>> = members.iter().map(|m| xk_of(m)).collect();

    for iter in 1..=MAX_ITER {
        iterations = iter;
        let fitted = x.matvec(&beta)?;
        for i in 0..n {
            residuals[i] = y[i] - fitted[i];
        }
        let ss: T = residuals.iter().map(|&e| e * e).sum();
        scale = ss / count(n.saturating_sub(p).max(1));
        rho = if pairs == 0 || scale == T::zero() {
            T::zero()
        } else {
            let mut cross = T::zero();
            for m in &members {
                let s: T = m.iter().map(|&i| residuals[i]).sum();
                let s2: T = m.iter().map(|&i| residuals[i] * residuals[i]).sum();
                cross = cross + (s * s - s2) / lit(2.0);
            }
            (cross / count(pairs) / scale).max(rho_floor).min(lit(RHO_CEILING))
        };
        // B = sum X_k^T V_k^-1 X_k, u = sum X_k^T V_k^-1 y_k
        bread = Matrix::zeros(p, p);
        let mut u = vec![T::zero(); p];
        for (m, cols) in members.iter().zip(&cluster_cols) {
            let yk: Vec<T> = m.iter().map(|&i| y[i]).collect();
            for a in 0..p {
                let va = exch_solve(rho, &cols[a]);
                u[a] = u[a] + dot(&va, &yk);
                for b in 0..p {
                    bread[(a, b)] = bread[(a, b)] + dot(&va, &cols[b]);
                }
            }
        }
        let inv = spd_inverse(&bread)?;
        let next = inv.matvec(&u)?;
        let change = beta
            .iter()
            .zip(&next)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        beta = next;
        let size = beta.iter().fold(T::one(), |a, &b| a.max(b.abs()));
        if change <= lit::<T>(TOL) * size {
            break;
        }
    }
    let fitted = x.matvec(&beta)?;
    for i in 0..n {
        residuals[i] = y[i] - fitted[i];
    }
    let inv = spd_inverse(&bread)?;
    let mut meat = Matrix::zeros(p, p);
    for (m, cols) in members.iter().zip(&cluster_cols) {
        let ek: Vec<T> = m.iter().map(|&i| residuals[i]).collect();
        let ve = exch_solve(rho, &ek);
        let score: Vec<T> = cols.iter().map(|c| dot(c, &ve)).collect();
        for a in 0..p {
            for b in 0..p {
                meat[(a, b)] = meat[(a, b)] + score[a] * score[b];
            }
        }
    }
    let covariance = inv.matmul(&meat)?.matmul(&inv)?;
    let std_errors: Vec<T> = (0..p).map(|s| covariance[(s, s)].max(T::zero()).sqrt()).collect();
    let z = std_normal_quantile(T::one() - alpha / lit(2.0))?;
    let intervals = beta
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| ConfidenceSet::centered(b, z * se, T::one() - alpha, CiMethod::Wald, RangeSource::Known))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeeFit {
        coefficients: beta,
        covariance,
        std_errors,
        rho,
        scale,
        iterations,
        intervals,
    })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{meat_estimator, ols_fit};

    #[test]
    fn exchangeable_inverse_matches_dense() {
        let rho = 0.3;
        let v = [1.0f64, -2.0, 0.5];
        let got = exch_solve(rho, &v);
        let dense = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { rho });
        let back = dense.matvec(&got).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singletons_reduce_to_hc0() {
        let x = Matrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = [0.1, 1.3, 1.9, 3.2, 3.8, 5.3];
        let g = gee_exchangeable_wald(&x, &y, &Partition::singletons(6).unwrap(), 0.05).unwrap();
        let o = ols_fit(&x, &y).unwrap();
        assert_eq!(g.rho, 0.0);
        for s in 0..2 {
            assert!((g.coefficients[s] - o.coefficients[s]).abs() < 1e-12);
            for t in 0..2 {
                assert!((g.covariance[(s, t)] - meat_estimator(&o, s, t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_cluster_rejected() {
        let x = Matrix::from_fn(4, 1, |_, _| 1.0);
        assert!(gee_exchangeable_wald(&x, &[1.0, 2.0, 3.0, 4.0], &Partition::sequential(4, 1).unwrap(), 0.05).is_err());
    }
}
