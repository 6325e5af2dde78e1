//! Functional averages and U-class membership.
//!
//! `Av(g(Z))` is the integral (or sum) of `g` over the support of `Z` divided
//! by the support's measure. A variable is in the U class when its mean equals
//! its functional average; for regular supports that is the midpoint.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{summarize, Continuity, SupportSpec};
use crate::scalar::{count, lit, Real};

/// Relative tolerance for U membership of analytically specified distributions.
pub const ANALYTIC_TOLERANCE: f64 = 1e-3;
/// Standard errors allowed between sample mean and functional average.
pub const SAMPLE_SE_MULTIPLIER: f64 = 3.0;
/// Largest support enumerated by [`eq2_identity_check`].
pub const MAX_ENUMERATION: usize = 1_000_000;

/// `Av(Z^k)` over a continuous interval.
pub fn av_moment<T: Real>(support: &SupportSpec<T>, k: i32) -> Result<T> {
    if k < 0 {
        return Err(invalid(format!("moment order must be >= 0, got {k}")));
    }
    if support.continuity != Continuity::Continuous {
        return Err(Error::Unsupported("av_moment needs a continuous support".into()));
    }
    let (m, big) = (support.lower, support.upper);
    let k1 = k + 1;
    if support.is_symmetric() {
        return Ok(if k % 2 == 1 {
            T::zero()
        } else {
            big.powi(k) / count(k1 as usize)
        });
    }
    Ok((big.powi(k1) - m.powi(k1)) / (count::<T>(k1 as usize) * (big - m)))
}

/// `sinh(x) / x`, equal to 1 at 0.
pub fn sinhc<T: Real>(x: T) -> T {
    if x.abs() < lit(1e-2) {
        let x2 = x * x;
        // 1 + x^2/6 + x^4/120 + x^6/5040
        T::one() + x2 / lit(6.0) * (T::one() + x2 / lit(20.0) * (T::one() + x2 / lit(42.0)))
    } else {
        x.sinh() / x
    }
}

/// `ln(sinh(x) / x)` without overflow for large `|x|`.
pub fn ln_sinhc<T: Real>(x: T) -> T {
    let a = x.abs();
    if a < lit(1e-2) {
        sinhc(a).ln()
    } else if a < lit(20.0) {
        (a.sinh() / a).ln()
    } else {
        // sinh(a) = e^a (1 - e^{-2a}) / 2
        a + (-(lit::<T>(-2.0) * a).exp()).ln_1p() - T::LN_2() - a.ln()
    }
}

/// `Av(exp(s w Z))` for `Z` on the symmetric interval `[-M, M]`.
pub fn av_exp<T: Real>(s: T, w: T, big_m: T) -> T {
    sinhc(s * w * big_m)
}

/// Log of [`av_product`].
pub fn ln_av_product<T: Real>(s: T, w: &[T], big_m: &[T]) -> Result<T> {
    if w.len() != big_m.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} supports",
            w.len(),
            big_m.len()
        )));
    }
    Ok(w.iter().zip(big_m).map(|(&wi, &mi)| ln_sinhc(s * wi * mi)).sum())
}

/// `prod_i Av(exp(s w_i Z_i))` for symmetric supports `[-M_i, M_i]`.
pub fn av_product<T: Real>(s: T, w: &[T], big_m: &[T]) -> Result<T> {
    Ok(ln_av_product(s, w, big_m)?.exp())
}

/// Exact `Av(exp(s Z))` for `Z` on a continuous interval `[m, M]`.
pub fn av_exp_interval<T: Real>(s: T, support: &SupportSpec<T>) -> T {
    let r = support.upper - support.lower;
    let x = s * r / lit(2.0);
    (s * support.midpoint()).exp() * sinhc(x)
}

/// `exp(s^2 w^2 R^2 / 24)`, which dominates `Av(exp(s w Z))` for regular continuous `Z`.
pub fn u_mgf_bound<T: Real>(s: T, w: T, r: T) -> T {
    let x = s * w * r;
    (x * x / lit(24.0)).exp()
}

/// `exp(s Av + s^2 R^2 / 8)`, the extended Hoeffding bound on `E exp(s Z)`
/// for sub-U `Z`. A nonpositive `av` (a centered sub-U variable) tightens the bound.
pub fn hoeffding_av_bound<T: Real>(s: T, support: &SupportSpec<T>, av: T) -> Result<T> {
    if !(s > T::zero()) {
        return Err(invalid(format!("s must be > 0, got {s}")));
    }
    let r = support.range();
    Ok((s * av + s * s * r * r / lit(8.0)).exp())
}

/// `exp(M^-2 Av(Z^2) (e^{sM} - 1 - sM))`.
pub fn bernstein_av_bound<T: Real>(s: T, big_m: T, av_z2: T) -> Result<T> {
    if !(big_m > T::zero()) {
        return Err(invalid(format!("M must be > 0, got {big_m}")));
    }
    if !(av_z2 >= T::zero()) {
        return Err(invalid("Av(Z^2) must be nonnegative"));
    }
    let x = s * big_m;
    Ok((av_z2 / (big_m * big_m) * (x.exp_m1() - x)).exp())
}

/// Upper bound on `E exp(s Z)` for `Z` on the integers `{-M, ..., M}`, given
/// the functional average of `exp(s Z)`.
pub fn discrete_mgf_adjustment<T: Real>(av_exp_value: T, big_m: i64) -> Result<T> {
    if big_m <= 0 {
        return Err(invalid(format!("M must be a positive integer, got {big_m}")));
    }
    let two_m: T = count(2 * big_m as usize);
    let card = two_m + T::one();
    Ok(card / two_m * (av_exp_value - T::one() / card))
}

/// Outcome of [`check_u_class`] and [`check_u_class_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UDiagnosticsReport<T> {
    pub expected_value: T,
    pub functional_average: T,
    pub midpoint: T,
    pub is_regular: bool,
    pub is_u: bool,
    /// `Av(Z) <= E Z` within tolerance.
    pub is_sub_u: bool,
    /// Functional average of the centered variable, `Av(Z) - E Z`.
    pub centered_average: T,
    /// `int F - int S` over the support, `M + m - 2 E Z`.
    pub cdf_area_gap: T,
    pub tolerance: T,
}

fn report<T: Real>(mean: T, support: &SupportSpec<T>, tolerance: T) -> UDiagnosticsReport<T> {
    let midpoint = support.midpoint();
    let is_regular = support.is_regular();
    // Regular supports have Av(Z) equal to the midpoint.
    let av = midpoint;
    UDiagnosticsReport {
        expected_value: mean,
        functional_average: av,
        midpoint,
        is_regular,
        is_u: is_regular && (mean - av).abs() <= tolerance,
        is_sub_u: av <= mean + tolerance,
        centered_average: av - mean,
        cdf_area_gap: support.upper + support.lower - mean - mean,
        tolerance,
    }
}

/// U diagnostics for a distribution with known mean.
pub fn check_u_class<T: Real>(mean: T, support: &SupportSpec<T>) -> Result<UDiagnosticsReport<T>> {
    if !mean.is_finite() {
        return Err(Error::NonFinite { what: "mean".into() });
    }
    if mean < support.lower || mean > support.upper {
        return Err(invalid(format!(
            "mean {mean} outside support [{}, {}]",
            support.lower, support.upper
        )));
    }
    Ok(report(mean, support, lit::<T>(ANALYTIC_TOLERANCE) * support.range()))
}

/// U diagnostics from a sample. Without a known support the observed
/// `[min, max]` is used. The tolerance is three standard errors of the mean.
pub fn check_u_class_sample<T: Real>(
    values: &[T],
    support: Option<&SupportSpec<T>>,
) -> Result<UDiagnosticsReport<T>> {
    let summary = summarize(values)?;
    let observed;
    let support = match support {
        Some(s) => s,
        None => {
            if summary.range == T::zero() {
                return Err(Error::Degenerate("constant sample has no support interval".into()));
            }
            observed = SupportSpec::continuous(summary.min, summary.max)?;
            &observed
        }
    };
    let se = (summary.variance / count(summary.n)).sqrt();
    Ok(report(summary.mean, support, lit::<T>(SAMPLE_SE_MULTIPLIER) * se))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck<T> {
    pub k: usize,
    pub bound: T,
    pub value: T,
    pub pass: bool,
}

/// Compares the raw moments `E Z^k` (`moments[k - 1]`, centered `Z`) against
/// `R^k / (2^k (k + 1))` for even `k` and `0` for odd `k`.
pub fn moment_condition_check<T: Real>(moments: &[T], r: T) -> Vec<MomentCheck<T>> {
    moments
        .iter()
        .enumerate()
        .map(|(idx, &value)| {
            let k = idx + 1;
            let bound = if k % 2 == 0 {
                (r / lit(2.0)).powi(k as i32) / count(k + 1)
            } else {
                T::zero()
            };
            let slack = lit::<T>(1e-12) * bound.abs().max(T::one());
            MomentCheck {
                k,
                bound,
                value,
                pass: value <= bound + slack,
            }
        })
        .collect()
}

/// Both sides of an enumeration identity and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub gap: T,
}

fn check_pmf<T: Real>(probs: &[T]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InsufficientData("empty support".into()));
    }
    if let Some(i) = probs.iter().position(|p| !(*p > T::zero())) {
        return Err(invalid(format!("support point {i} has zero probability")));
    }
    let total: T = probs.iter().copied().sum();
    if (total - T::one()).abs() > lit::<T>(1e-9) {
        return Err(invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Enumerates `Av(g) = E g + R^-1 Cov(g, 1/p)` over a finite support with
/// `R` its cardinality. `values[i]` is `g` at support point `i`.
fn enumeration_identity<T: Real>(values: &[T], probs: &[T]) -> IdentityCheck<T> {
    let r: T = count(values.len());
    let lhs = values.iter().copied().sum::<T>() / r;
    let mean: T = values.iter().zip(probs).map(|(&v, &p)| v * p).sum();
    // E[g / p] = sum g, E[1 / p] = |S|
    let e_g_over_p: T = values.iter().copied().sum();
    let cov = e_g_over_p - mean * r;
    let rhs = mean + cov / r;
    IdentityCheck { lhs, rhs, gap: lhs - rhs }
}

/// `Av(Z)` against `E Z + R^-1 Cov(Z, 1/f(Z))` for a pmf on `support`.
pub fn eq1_identity_check<T: Real>(support: &[T], probs: &[T]) -> Result<IdentityCheck<T>> {
    if support.len() != probs.len() {
        return Err(Error::DimensionMismatch("support and pmf lengths differ".into()));
    }
    check_pmf(probs)?;
    Ok(enumeration_identity(support, probs))
}

/// `Av(g)` against `E g + R_z^-1 Cov(g, 1/L)` for a joint pmf given as a list
/// of support points (which need not form a rectangle) with probabilities.
pub fn eq2_identity_check<T: Real>(
    points: &[Vec<T>],
    probs: &[T],
    g: impl Fn(&[T]) -> T,
) -> Result<IdentityCheck<T>> {
    if points.len() > MAX_ENUMERATION {
        return Err(Error::SupportTooLarge {
            points: points.len(),
            limit: MAX_ENUMERATION,
        });
    }
    if points.len() != probs.len() {
        return Err(Error::DimensionMismatch("support and pmf lengths differ".into()));
    }
    check_pmf(probs)?;
    let values: Vec<T> = points.iter().map(|z| g(z)).collect();
    Ok(enumeration_identity(&values, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn av_moment_examples() {
        let s = SupportSpec::symmetric(2.0).unwrap();
        assert_relative_eq!(av_moment(&s, 2).unwrap(), 4.0 / 3.0);
        assert_eq!(av_moment(&s, 3).unwrap(), 0.0);
        assert_eq!(av_moment(&SupportSpec::continuous(0.0, 1.0).unwrap(), 1).unwrap(), 0.5);
        assert!(av_moment(&s, -1).is_err());
    }

    #[test]
    fn av_exp_examples() {
        assert_eq!(av_exp(0.0, 1.0, 1.0), 1.0);
        assert_relative_eq!(av_exp(0.5, 1.0, 1.0), 1.042190, epsilon = 1e-6);
        let p = av_product(0.148776, &[1.0; 100], &[1.0; 100]).unwrap();
        assert_relative_eq!(p, 1.4457, epsilon = 1e-4);
        assert_eq!(av_product(3.0, &[0.0; 4], &[1.0; 4]).unwrap(), 1.0);
        assert_relative_eq!(av_product(1.0, &[0.5, 0.5], &[1.0, 1.0]).unwrap(), (0.5f64.sinh() / 0.5).powi(2), epsilon = 1e-14);
        assert_relative_eq!(av_product(1.0, &[1.0], &[1.0]).unwrap(), 1.175201, epsilon = 1e-6);
    }

    #[test]
    fn ln_sinhc_is_continuous_across_branches() {
        for &x in &[1e-2, 20.0] {
            let below: f64 = ln_sinhc(x * (1.0 - 1e-12));
            let above: f64 = ln_sinhc(x * (1.0 + 1e-12));
            assert_relative_eq!(below, above, max_relative = 1e-9);
        }
        assert!(ln_sinhc(1e4f64).is_finite());
    }

    #[test]
    fn mgf_bounds() {
        assert_eq!(u_mgf_bound(0.0, 1.0, 1.0), 1.0);
        assert_relative_eq!(u_mgf_bound(1.0, 1.0, 1.0), 1.042547, epsilon = 1e-6);
        assert!(u_mgf_bound(1.0, 1.0, 1.0) >= av_exp(0.5, 1.0, 1.0));
        assert_relative_eq!(u_mgf_bound(2.0, 1.0, 1.0), 1.181360, epsilon = 1e-6);

        let unit = SupportSpec::continuous(0.0, 1.0).unwrap();
        assert_relative_eq!(hoeffding_av_bound(1.0, &unit, 0.0).unwrap(), 1.133148, epsilon = 1e-6);
        assert_relative_eq!(hoeffding_av_bound(1e-9, &unit, 0.0).unwrap(), 1.0, epsilon = 1e-8);
        assert_relative_eq!(hoeffding_av_bound(1.0, &unit, -0.1).unwrap(), 1.025315, epsilon = 1e-6);

        assert_relative_eq!(bernstein_av_bound(1.0, 1.0, 1.0 / 3.0).unwrap(), ((std::f64::consts::E - 2.0) / 3.0).exp(), epsilon = 1e-14);
        assert_eq!(bernstein_av_bound(0.0, 1.0, 1.0 / 3.0).unwrap(), 1.0);
        assert_relative_eq!(bernstein_av_bound(1.0, 2.0, 4.0 / 3.0).unwrap(), ((2f64.exp_m1() - 2.0) / 3.0).exp(), epsilon = 1e-14);
        assert!(bernstein_av_bound(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn discrete_adjustment_examples() {
        assert_relative_eq!(discrete_mgf_adjustment(1.0, 1).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(discrete_mgf_adjustment(1.2, 1).unwrap(), 1.3, epsilon = 1e-14);
        assert_relative_eq!(discrete_mgf_adjustment(1.1, 5).unwrap(), 1.11, epsilon = 1e-14);
        assert!(discrete_mgf_adjustment(1.0, 0).is_err());
    }

    #[test]
    fn u_membership() {
        let unit = SupportSpec::continuous(0.0, 1.0).unwrap();
        assert!(check_u_class(0.5, &unit).unwrap().is_u);
        let b = check_u_class(2.0 / 7.0, &unit).unwrap();
        assert!(!b.is_u);
        assert!(!b.is_sub_u);
        assert_relative_eq!(b.cdf_area_gap, 1.0 - 4.0 / 7.0);
        assert_eq!(check_u_class(0.5, &unit).unwrap().cdf_area_gap, 0.0);
        assert!(check_u_class(0.9, &unit).unwrap().is_sub_u);
    }

    #[test]
    fn moment_checks() {
        let m = 1.5;
        let uniform = moment_condition_check(&[0.0, m * m / 3.0], 2.0 * m);
        assert!(uniform.iter().all(|c| c.pass));
        let two_point = moment_condition_check(&[0.0, m * m], 2.0 * m);
        assert!(!two_point[1].pass);
        let beta = moment_condition_check(&[0.0, 1.0 / 84.0], 1.0);
        assert!(beta[1].pass);
        assert_relative_eq!(beta[1].bound, 1.0 / 12.0);
    }

    #[test]
    fn eq1_examples() {
        let p = 0.3;
        let c = eq1_identity_check(&[0.0f64, 1.0], &[1.0 - p, p]).unwrap();
        assert_relative_eq!(c.lhs, 0.5);
        assert!(c.gap.abs() < 1e-15);
        let c = eq1_identity_check(&[0.0, 1.0, 2.0], &[0.5, 0.25, 0.25]).unwrap();
        assert_relative_eq!(c.rhs, 1.0, epsilon = 1e-15);
        assert!(eq1_identity_check(&[0.0, 1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn eq2_comonotone_support() {
        let pts = vec![vec![0.0f64, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let c = eq2_identity_check(&pts, &[0.2, 0.5, 0.3], |z| z[0] * z[1]).unwrap();
        assert_relative_eq!(c.lhs, 5.0 / 3.0);
        assert!(c.gap.abs() < 1e-12);
    }
}
