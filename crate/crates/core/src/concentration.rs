//! Tail bounds and confidence sets for weighted sums of bounded variables
//! whose joint MGF is dominated by the product of functional averages.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{CiMethod, ConfidenceSet, RangeSource, Summary};
use crate::scalar::{count, lit, Real};
use crate::special::std_normal_quantile;
use crate::uclass::ln_av_product;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailTheorem {
    Hoeffding,
    USharp,
    BernsteinH,
    BernsteinSimple,
}

/// Upper bound on `Pr(|S_n| > tau)`, capped at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound<T> {
    pub tau: T,
    pub value: T,
    pub theorem: TailTheorem,
}

fn check_tau<T: Real>(tau: T) -> Result<()> {
    if !(tau > T::zero()) {
        return Err(invalid(format!("tau must be > 0, got {tau}")));
    }
    Ok(())
}

/// `sum_i w_i^2 R_i^2`.
pub fn sum_w2r2<T: Real>(w: &[T], r: &[T]) -> Result<T> {
    if w.len() != r.len() {
        return Err(Error::DimensionMismatch(format!("{} weights, {} ranges", w.len(), r.len())));
    }
    if let Some(i) = r.iter().position(|x| !(*x > T::zero())) {
        return Err(invalid(format!("range {i} must be > 0")));
    }
    Ok(w.iter().zip(r).map(|(&a, &b)| a * a * b * b).sum())
}

fn sub_gaussian_tail<T: Real>(tau: T, w: &[T], r: &[T], k: T, theorem: TailTheorem) -> Result<TailBound<T>> {
    check_tau(tau)?;
    let v = sum_w2r2(w, r)?;
    if v == T::zero() {
        return Err(Error::Degenerate("sum of w^2 R^2 is zero".into()));
    }
    let value = (lit::<T>(2.0) * (-k * tau * tau / v).exp()).min(T::one());
    Ok(TailBound { tau, value, theorem })
}

/// `min(1, 2 exp(-2 tau^2 / sum w^2 R^2))` for sub-U variables.
pub fn hoeffding_tail<T: Real>(tau: T, w: &[T], r: &[T]) -> Result<TailBound<T>> {
    sub_gaussian_tail(tau, w, r, lit(2.0), TailTheorem::Hoeffding)
}

/// `min(1, 2 exp(-6 tau^2 / sum w^2 R^2))` for regular continuous U variables.
pub fn u_tail<T: Real>(tau: T, w: &[T], r: &[T]) -> Result<TailBound<T>> {
    sub_gaussian_tail(tau, w, r, lit(6.0), TailTheorem::USharp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BernsteinForm {
    H,
    Simple,
}

/// `h(u) = (u + 1) ln(u + 1) - u`.
pub fn bernstein_h<T: Real>(u: T) -> T {
    (u + T::one()) * u.ln_1p() - u
}

/// Bernstein-type bound for `S_n = w sum eps_i` with `|eps_i| <= M`.
pub fn bernstein_tail<T: Real>(tau: T, w: T, big_m: T, av_z2: &[T], form: BernsteinForm) -> Result<TailBound<T>> {
    check_tau(tau)?;
    if !(big_m > T::zero()) {
        return Err(invalid(format!("M must be > 0, got {big_m}")));
    }
    if !(w > T::zero()) {
        return Err(invalid(format!("common weight must be > 0, got {w}")));
    }
    if av_z2.iter().any(|a| !(*a >= T::zero())) {
        return Err(invalid("Av(eps^2) must be nonnegative"));
    }
    let sum_av: T = av_z2.iter().copied().sum();
    let two = lit::<T>(2.0);
    let exponent = match form {
        BernsteinForm::H => {
            if sum_av == T::zero() {
                T::infinity()
            } else {
                sum_av / (big_m * big_m) * bernstein_h(tau * big_m / (w * sum_av))
            }
        }
        BernsteinForm::Simple => tau * tau / (two * w * w * sum_av + two / lit(3.0) * w * tau * big_m),
    };
    let theorem = match form {
        BernsteinForm::H => TailTheorem::BernsteinH,
        BernsteinForm::Simple => TailTheorem::BernsteinSimple,
    };
    Ok(TailBound {
        tau,
        value: (two * (-exponent).exp()).min(T::one()),
        theorem,
    })
}

/// Method for [`ci_mean`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMethod {
    Hoeffding,
    USharp,
    /// Range-free set for nonnegative outcomes, `[Ybar / (1 + c), Ybar / (1 - c)]`.
    Ratio,
    Bernstein,
    Wald,
}

fn log_two_over<T: Real>(alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok((lit::<T>(2.0) / alpha).ln())
}

/// `sqrt(log(2/alpha) / 6)`, the multiplier of the U-sharp half-width.
pub fn u_multiplier<T: Real>(alpha: T) -> Result<T> {
    Ok((log_two_over(alpha)? / lit(6.0)).sqrt())
}

/// Confidence set for a common mean from an equally weighted sample.
pub fn ci_mean<T: Real>(summary: &Summary<T>, r: T, alpha: T, method: MeanMethod) -> Result<ConfidenceSet<T>> {
    let log2a = log_two_over(alpha)?;
    let n: T = count(summary.n);
    let level = T::one() - alpha;
    let ybar = summary.mean;
    let needs_range = !matches!(method, MeanMethod::Ratio | MeanMethod::Wald);
    if needs_range && !(r >= T::zero()) {
        return Err(invalid(format!("range must be >= 0, got {r}")));
    }
    match method {
        MeanMethod::Hoeffding => {
            let hw = r * (log2a / (lit::<T>(2.0) * n)).sqrt();
            ConfidenceSet::centered(ybar, hw, level, CiMethod::Hoeffding, RangeSource::Known)
        }
        MeanMethod::USharp => {
            let hw = r * (log2a / (lit::<T>(6.0) * n)).sqrt();
            ConfidenceSet::centered(ybar, hw, level, CiMethod::USharp, RangeSource::Known)
        }
        MeanMethod::Ratio => {
            if summary.min < T::zero() {
                return Err(invalid("ratio form needs nonnegative outcomes"));
            }
            let bound = lit::<T>(2.0) * log2a;
            if !(n > bound) {
                return Err(Error::RatioCondition {
                    n: summary.n,
                    bound: crate::scalar::to_f64(bound),
                });
            }
            let c = (bound / n).sqrt();
            ConfidenceSet::new(
                ybar / (T::one() + c),
                ybar / (T::one() - c),
                level,
                CiMethod::Hoeffding,
                RangeSource::TwoMean,
            )
        }
        MeanMethod::Bernstein => {
            // Solve tau^2 = L (2 w^2 sum Av + (2/3) w tau M) with Av = R^2 / 12, M = R / 2.
            let w = T::one() / n;
            let big_m = r / lit(2.0);
            let sum_av = n * r * r / lit(12.0);
            let b = lit::<T>(2.0) / lit(3.0) * log2a * w * big_m;
            let c = lit::<T>(2.0) * log2a * w * w * sum_av;
            let hw = (b + (b * b + lit::<T>(4.0) * c).sqrt()) / lit(2.0);
            ConfidenceSet::centered(ybar, hw, level, CiMethod::Bernstein, RangeSource::Known)
        }
        MeanMethod::Wald => {
            let z = std_normal_quantile(T::one() - alpha / lit(2.0))?;
            let hw = z * (summary.variance / n).sqrt();
            ConfidenceSet::centered(ybar, hw, level, CiMethod::Wald, RangeSource::Known)
        }
    }
}

/// Where the ranges of a linear statistic's summands come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearRange<'a, T> {
    /// Per-observation ranges `R_i`.
    Known(&'a [T]),
    /// A common marginal range `R`: half-width uses `R sqrt(sum w^2)`.
    Marginal(T),
    /// Fitted means of nonnegative outcomes, `R_i <= 2 E Y_i`.
    TwoMean(&'a [T]),
    /// Sample range `R_hat_s` of the weighted residuals `W_si e_i`.
    ResidualRange(T),
}

/// `sqrt(sum w^2 R^2)` (or its plug-in) for the chosen range source.
pub fn linear_scale<T: Real>(w: &[T], range: LinearRange<'_, T>) -> Result<(T, RangeSource)> {
    let sum_w2: T = w.iter().map(|&x| x * x).sum();
    let len_check = |v: &[T]| {
        if v.len() != w.len() {
            Err(Error::DimensionMismatch(format!("{} weights, {} range values", w.len(), v.len())))
        } else {
            Ok(())
        }
    };
    match range {
        LinearRange::Known(r) => {
            len_check(r)?;
            if r.iter().any(|x| !(*x >= T::zero())) {
                return Err(invalid("ranges must be nonnegative"));
            }
            let v: T = w.iter().zip(r).map(|(&a, &b)| a * a * b * b).sum();
            Ok((v.sqrt(), RangeSource::Known))
        }
        LinearRange::Marginal(r) => {
            if !(r >= T::zero()) {
                return Err(invalid("marginal range must be nonnegative"));
            }
            Ok((r * sum_w2.sqrt(), RangeSource::MarginalRange))
        }
        LinearRange::TwoMean(means) => {
            len_check(means)?;
            if let Some(i) = means.iter().position(|m| *m < T::zero()) {
                return Err(invalid(format!("two-mean range needs nonnegative fitted means; row {i} is negative")));
            }
            let v: T = w.iter().zip(means).map(|(&a, &m)| a * a * m * m).sum();
            Ok((lit::<T>(2.0) * v.sqrt(), RangeSource::TwoMean))
        }
        LinearRange::ResidualRange(r_hat) => {
            if !(r_hat >= T::zero()) {
                return Err(invalid("residual range must be nonnegative"));
            }
            Ok((count::<T>(w.len()).sqrt() * r_hat, RangeSource::ResidualRange))
        }
    }
}

/// `B_s +/- scale * sqrt(log(2/alpha) / 6)` for a linear statistic of U errors.
pub fn ci_linear<T: Real>(estimate: T, w: &[T], range: LinearRange<'_, T>, alpha: T) -> Result<ConfidenceSet<T>> {
    let mult = u_multiplier(alpha)?;
    let (scale, source) = linear_scale(w, range)?;
    ConfidenceSet::centered(estimate, scale * mult, T::one() - alpha, CiMethod::USharp, source)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SChoice {
    Hoeffding,
    USharp,
}

/// Minimizer in `s` of the Chernoff bound at `tau`.
pub fn optimal_s<T: Real>(tau: T, sum_w2r2: T, theorem: SChoice) -> Result<T> {
    check_tau(tau)?;
    if !(sum_w2r2 > T::zero()) {
        return Err(Error::Degenerate("sum of w^2 R^2 is zero".into()));
    }
    let k = match theorem {
        SChoice::Hoeffding => lit::<T>(4.0),
        SChoice::USharp => lit::<T>(12.0),
    };
    Ok(k * tau / sum_w2r2)
}

/// `s = 6 (M^2 c* sum w^2)^{-1/2} sqrt(log(2/alpha) / 6)`: the U-sharp
/// optimum at the confidence-set half-width, rescaled by `c*` to keep the
/// exponentials readable.
pub fn table_s<T: Real>(big_m: T, c_star: T, sum_w2: T, alpha: T) -> Result<T> {
    let d = big_m * big_m * c_star * sum_w2;
    if !(d > T::zero()) {
        return Err(Error::Degenerate("M^2 c* sum w^2 must be > 0".into()));
    }
    Ok(lit::<T>(6.0) / d.sqrt() * u_multiplier(alpha)?)
}

/// Approximate ceiling on `mu * phi` for A5: `sum w^2 R^2 / (12 sum w^2 sigma^2) - 1`.
pub fn rule_of_thumb<T: Real>(w: &[T], variances: &[T], r: &[T]) -> Result<T> {
    if variances.len() != w.len() {
        return Err(Error::DimensionMismatch(format!("{} weights, {} variances", w.len(), variances.len())));
    }
    let num = sum_w2r2(w, r)?;
    let den: T = w.iter().zip(variances).map(|(&a, &v)| a * a * v).sum();
    if !(den > T::zero()) {
        return Err(Error::Degenerate("weighted variance is zero".into()));
    }
    Ok(num / (lit::<T>(12.0) * den) - T::one())
}

/// Homogeneous case `R^2 / (12 sigma^2) - 1`.
pub fn rule_of_thumb_homogeneous<T: Real>(variance: T, r: T) -> Result<T> {
    if !(variance > T::zero()) {
        return Err(Error::Degenerate("variance is zero".into()));
    }
    Ok(r * r / (lit::<T>(12.0) * variance) - T::one())
}

/// Ceiling on `phi` for a complete dependency graph on `n` nodes.
pub fn phi_threshold<T: Real>(mu_phi_bound: T, n: usize) -> Result<T> {
    if n < 2 {
        return Err(invalid("phi threshold needs n >= 2"));
    }
    Ok(mu_phi_bound / count(n - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum A5Verdict {
    Holds,
    Violated,
    Boundary,
}

impl A5Verdict {
    pub fn symbol(self) -> &'static str {
        match self {
            A5Verdict::Holds => "<",
            A5Verdict::Violated => ">",
            A5Verdict::Boundary => "=",
        }
    }
}

/// Empirical MGF maximum against the functional-average product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A5Report<T> {
    pub s_used: T,
    pub a_hat: T,
    pub ln_a_hat: T,
    /// Monte Carlo standard error of `a_hat`.
    pub a_hat_se: T,
    pub av_star: T,
    pub ln_av_star: T,
    pub verdict: A5Verdict,
}

/// Collects `x_r = s w e_r` over replications for an [`A5Report`].
#[derive(Debug, Clone, Default)]
pub struct A5Accumulator<T> {
    xs: Vec<T>,
}

impl<T: Real> A5Accumulator<T> {
    pub fn new() -> Self {
        Self { xs: Vec::new() }
    }

    pub fn push(&mut self, x: T) {
        self.xs.push(x);
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// `(ln mean exp(sign x), ln se)` using a max shift.
    fn signed_moments(&self, sign: T) -> (T, T) {
        let shift = self.xs.iter().map(|&x| sign * x).fold(T::neg_infinity(), T::max);
        let n: T = count(self.xs.len());
        let scaled: Vec<T> = self.xs.iter().map(|&x| (sign * x - shift).exp()).collect();
        let mean = scaled.iter().copied().sum::<T>() / n;
        let var = if self.xs.len() > 1 {
            scaled.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one())
        } else {
            T::zero()
        };
        (mean.ln() + shift, (var / n).sqrt().ln() + shift)
    }

    pub fn finish(&self, s: T, ln_av_star: T) -> Result<A5Report<T>> {
        if self.xs.is_empty() {
            return Err(Error::InsufficientData("no replications".into()));
        }
        let plus = self.signed_moments(T::one());
        let minus = self.signed_moments(-T::one());
        let (ln_a, ln_se) = if plus.0 >= minus.0 { plus } else { minus };
        let verdict = a5_verdict(ln_a, ln_se, ln_av_star);
        Ok(A5Report {
            s_used: s,
            a_hat: ln_a.exp(),
            ln_a_hat: ln_a,
            a_hat_se: ln_se.exp(),
            av_star: ln_av_star.exp(),
            ln_av_star,
            verdict,
        })
    }
}

/// Holds when `A_hat + se < Av*`, violated when `A_hat - se > Av*`, boundary otherwise.
fn a5_verdict<T: Real>(ln_a: T, ln_se: T, ln_av: T) -> A5Verdict {
    let se_ratio = (ln_se - ln_a).exp();
    let upper = ln_a + se_ratio.ln_1p();
    let lower = if se_ratio < T::one() {
        ln_a + (-se_ratio).ln_1p()
    } else {
        T::neg_infinity()
    };
    if upper < ln_av {
        A5Verdict::Holds
    } else if lower > ln_av {
        A5Verdict::Violated
    } else {
        A5Verdict::Boundary
    }
}

/// A5 diagnostic from a `reps x n` matrix of error draws (rows are replications).
pub fn a5_empirical<T: Real>(draws: &[Vec<T>], w: &[T], s: T, big_m: &[T]) -> Result<A5Report<T>> {
    if !(s > T::zero()) {
        return Err(invalid(format!("s must be > 0, got {s}")));
    }
    let mut acc = A5Accumulator::new();
    for (r, e) in draws.iter().enumerate() {
        if e.len() != w.len() {
            return Err(Error::DimensionMismatch(format!("draw {r} has {} values, expected {}", e.len(), w.len())));
        }
        acc.push(s * w.iter().zip(e).map(|(&a, &b)| a * b).sum::<T>());
    }
    acc.finish(s, ln_av_product(s, w, big_m)?)
}
