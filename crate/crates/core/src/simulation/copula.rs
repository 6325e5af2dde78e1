use super::MarginalSpec;
use crate::error::{invalid, Error, Result};
use crate::linalg::{ensure_pd, CorrelationMatrix, Matrix, PdRepair};
use crate::rng::SeededStream;
use crate::special::std_normal_cdf;

/// A way to turn independent standard normals into correlated ones.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationFactor {
    /// Lower Cholesky factor of a correlation matrix.
    Dense(Matrix<f64>),
    /// Equicorrelation `rho` among `n` variables. Uses the representation
    /// `x_i = sqrt(1 - rho) z_i + c sum_j z_j`, valid for
    /// `-1/(n-1) < rho <= 1` (so `rho = 1` gives identical columns).
    Exchangeable { n: usize, rho: f64, c: f64 },
}

impl CorrelationFactor {
    pub fn exchangeable(n: usize, rho: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("exchangeable factor needs n >= 1"));
        }
        let floor = if n > 1 { -1.0 / (n - 1) as f64 } else { f64::NEG_INFINITY };
        if !(rho > floor && rho <= 1.0) {
            return Err(invalid(format!(
                "exchangeable correlation {rho} is not a valid correlation for n = {n} (needs {floor} < rho <= 1)"
            )));
        }
        let nf = n as f64;
        let c = ((1.0 - rho + nf * rho).sqrt() - (1.0 - rho).sqrt()) / nf;
        Ok(CorrelationFactor::Exchangeable { n, rho, c })
    }

    pub fn dense(corr: &CorrelationMatrix<f64>) -> Result<Self> {
        Ok(CorrelationFactor::Dense(corr.cholesky()?))
    }

    pub fn dim(&self) -> usize {
        match self {
            CorrelationFactor::Dense(l) => l.rows(),
            CorrelationFactor::Exchangeable { n, .. } => *n,
        }
    }

    /// Maps `z` (overwritten) to correlated standard normals.
    pub fn apply(&self, z: &mut [f64]) {
        match self {
            CorrelationFactor::Dense(l) => {
                // in place from the bottom row up, since row i only needs z[..=i]
                for i in (0..z.len()).rev() {
                    let row = &l.row(i)[..=i];
                    z[i] = row.iter().zip(&z[..=i]).map(|(a, b)| a * b).sum();
                }
            }
            CorrelationFactor::Exchangeable { rho, c, .. } => {
                let total: f64 = z.iter().sum();
                let a = (1.0 - rho).sqrt();
                for v in z.iter_mut() {
                    *v = a * *v + c * total;
                }
            }
        }
    }
}

/// Dense exchangeable correlation matrix; `rho` must keep it positive definite.
pub fn exchangeable_corr(n: usize, rho: f64) -> Result<CorrelationMatrix<f64>> {
    let floor = if n > 1 { -1.0 / (n - 1) as f64 } else { f64::NEG_INFINITY };
    if !(rho > floor && rho < 1.0) {
        return Err(invalid(format!(
            "exchangeable correlation {rho} is not positive definite for n = {n} (needs {floor} < rho < 1)"
        )));
    }
    CorrelationMatrix::new(Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho }))
}

/// Correlation clip applied before positive definite repair.
pub const TABLE3_CLIP: f64 = 0.999;

/// Off-diagonal `(i, j)` set to `phi* n^2 w_1i w_1j / sigma^2`, clipped to
/// `[-0.999, 0.999]`, then repaired by [`ensure_pd`].
pub fn table3_corr(phi_star: f64, w1: &[f64], sigma: f64) -> Result<PdRepair<f64>> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma must be > 0"));
    }
    let n = w1.len();
    let k = phi_star * (n * n) as f64 / (sigma * sigma);
    let raw = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (k * w1[i] * w1[j]).clamp(-TABLE3_CLIP, TABLE3_CLIP)
        }
    });
    ensure_pd(&raw)
}

/// One replication: `marginal^-1(Phi(factor * z))` with `z` drawn from `stream`.
pub fn copula_draw(factor: &CorrelationFactor, marginal: &MarginalSpec, stream: &mut SeededStream) -> Result<Vec<f64>> {
    let mut z = vec![0.0; factor.dim()];
    stream.fill_standard_normal(&mut z);
    factor.apply(&mut z);
    z.iter()
        .map(|&x| marginal.quantile(std_normal_cdf(x).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)))
        .collect()
}

/// `reps x n` draws; replication `r` uses stream `(seed, r)`.
pub fn copula_sample(
    factor: &CorrelationFactor,
    marginal: &MarginalSpec,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if factor.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "correlation factor is {}-dimensional, requested n = {n}",
            factor.dim()
        )));
    }
    marginal.validate()?;
    (0..reps)
        .map(|r| copula_draw(factor, marginal, &mut SeededStream::new(seed, r as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exchangeable_bounds() {
        assert_eq!(exchangeable_corr(3, 0.0).unwrap(), CorrelationMatrix::identity(3));
        assert!(exchangeable_corr(3, -0.49).unwrap().cholesky().is_ok());
        assert!(exchangeable_corr(3, -0.6).is_err());
        assert!(CorrelationFactor::exchangeable(3, 1.0).is_ok());
        assert!(CorrelationFactor::exchangeable(3, -0.5).is_err());
    }

    #[test]
    fn factor_reproduces_covariance() {
        // covariance of the linear map applied to unit vectors
        for &rho in &[-0.3, 0.0, 0.4, 1.0] {
            let n = 4;
            let f = CorrelationFactor::exchangeable(n, rho).unwrap();
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    f.apply(&mut e);
                    e
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let cov: f64 = (0..n).map(|k| cols[k][i] * cols[k][j]).sum();
                    let want = if i == j { 1.0 } else { rho };
                    assert!((cov - want).abs() < 1e-12, "rho {rho}: {cov}");
                }
            }
        }
    }

    #[test]
    fn table3_signs_and_identity() {
        let w = [0.1, 0.2, 0.3];
        let z = table3_corr(0.0, &w, 5.0).unwrap();
        assert_eq!(z.lambda, 0.0);
        assert_eq!(z.matrix, CorrelationMatrix::identity(3));
        let p = table3_corr(0.5, &w, 5.0).unwrap();
        let m = p.matrix.matrix();
        assert!(m[(0, 1)] > 0.0 && m[(1, 2)] > 0.0);
    }

    #[test]
    fn comonotone_rows() {
        let f = CorrelationFactor::exchangeable(5, 1.0).unwrap();
        let rows = copula_sample(&f, &MarginalSpec::Uniform { lo: 0.0, hi: 1.0 }, 5, 10, 3).unwrap();
        for r in rows {
            assert!(r.iter().all(|&v| (v - r[0]).abs() < 1e-12));
        }
    }
}
