//! Shared data model: samples, weight matrices, supports, partitions,
//! dependency summaries and confidence sets.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{count, Real};

/// Observed outcomes. Nonempty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    values: Vec<T>,
}

impl<T: Real> Sample<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty sample".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("sample value at row {i}"),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn summarize(&self) -> Result<Summary<T>> {
        summarize(&self.values)
    }
}

/// Basic sample statistics. Variance uses the `n - 1` divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub n: usize,
    pub mean: T,
    pub variance: T,
    pub min: T,
    pub max: T,
    pub range: T,
}

/// Mean, unbiased variance, extrema and range of `values`.
pub fn summarize<T: Real>(values: &[T]) -> Result<Summary<T>> {
    let n = values.len();
    if n == 0 {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    if n == 1 {
        return Err(Error::InsufficientData(
            "sample variance undefined for a single observation".into(),
        ));
    }
    let mean = values.iter().copied().sum::<T>() / count(n);
    let ss = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    let (min, max) = values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(Summary {
        n,
        mean,
        variance: ss / count(n - 1),
        min,
        max,
        range: max - min,
    })
}

/// A `p x n` matrix of weights; row `s` defines the statistic `sum_i w_si Y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    m: Matrix<T>,
}

impl<T: Real> WeightMatrix<T> {
    /// Checks finiteness and that every row has a nonzero entry.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        validate_weights(m)
    }

    pub fn from_row(row: Vec<T>) -> Result<Self> {
        let n = row.len();
        Self::new(Matrix::from_vec(1, n, row)?)
    }

    pub fn statistics(&self) -> usize {
        self.m.rows()
    }

    pub fn observations(&self) -> usize {
        self.m.cols()
    }

    pub fn row(&self, s: usize) -> &[T] {
        self.m.row(s)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }
}

pub fn validate_weights<T: Real>(m: Matrix<T>) -> Result<WeightMatrix<T>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InsufficientData("empty weight matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite {
            what: "weight matrix".into(),
        });
    }
    if let Some(row) = (0..m.rows()).find(|&s| m.row(s).iter().all(|&w| w == T::zero())) {
        return Err(Error::DegenerateWeightRow { row });
    }
    Ok(WeightMatrix { m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuity {
    Continuous,
    DiscreteInteger,
}

/// Support `[lower, upper]` of one variable.
///
/// For discrete supports the range is the counting-measure cardinality
/// `upper - lower + 1`; continuous supports use the interval length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportSpec<T> {
    pub lower: T,
    pub upper: T,
    pub continuity: Continuity,
}

impl<T: Real> SupportSpec<T> {
    pub fn continuous(lower: T, upper: T) -> Result<Self> {
        Self::new(lower, upper, Continuity::Continuous)
    }

    pub fn symmetric(max: T) -> Result<Self> {
        Self::continuous(-max, max)
    }

    pub fn discrete(lower: T, upper: T) -> Result<Self> {
        Self::new(lower, upper, Continuity::DiscreteInteger)
    }

    pub fn new(lower: T, upper: T, continuity: Continuity) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::NonFinite {
                what: "support bound".into(),
            });
        }
        if !(lower < upper) {
            return Err(invalid(format!("support needs lower < upper, got [{lower}, {upper}]")));
        }
        Ok(Self {
            lower,
            upper,
            continuity,
        })
    }

    pub fn range(&self) -> T {
        match self.continuity {
            Continuity::Continuous => self.upper - self.lower,
            Continuity::DiscreteInteger => self.upper - self.lower + T::one(),
        }
    }

    pub fn midpoint(&self) -> T {
        (self.upper + self.lower) / (T::one() + T::one())
    }

    /// Single interval, or an integer range without gaps.
    pub fn is_regular(&self) -> bool {
        match self.continuity {
            Continuity::Continuous => true,
            Continuity::DiscreteInteger => self.lower.fract() == T::zero() && self.upper.fract() == T::zero(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == -self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// Edges where covariances are nonzero.
    Linear,
    /// Edges where variables are statistically dependent.
    Dependency,
}

/// The two summary constants of a dependency structure.
///
/// `phi` and `sigma_bar` are `p x p`, one entry per pair of statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencySummary<T> {
    pub mu: T,
    pub phi: Matrix<T>,
    pub sigma_bar: Matrix<T>,
    pub graph_kind: GraphKind,
}

impl<T: Real> DependencySummary<T> {
    /// Single-statistic summary.
    pub fn scalar(mu: T, phi: T, sigma_bar: T, graph_kind: GraphKind) -> Self {
        Self {
            mu,
            phi: Matrix::from_vec(1, 1, vec![phi]).expect("1x1"),
            sigma_bar: Matrix::from_vec(1, 1, vec![sigma_bar]).expect("1x1"),
            graph_kind,
        }
    }

    /// Variance inflation `1 + mu * phi_ss` for statistic `s`.
    pub fn inflation(&self, s: usize) -> T {
        T::one() + self.mu * self.phi[(s, s)]
    }

    /// Errors when some diagonal inflation factor is negative.
    pub fn check_consistency(&self) -> Result<()> {
        if !(self.mu >= T::zero()) {
            return Err(Error::InconsistentSummary(format!("mean degree {} < 0", self.mu)));
        }
        for s in 0..self.phi.rows() {
            let g = self.inflation(s);
            if g < T::zero() {
                return Err(Error::InconsistentSummary(format!(
                    "1 + mu*phi = {g} < 0 for statistic {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Assignment of observations to clusters `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Every cluster id in `0..k` must be used at least once.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::InsufficientData("empty partition".into()));
        }
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; k];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(invalid(format!("cluster {c} has no members")));
        }
        Ok(Self { assignment, k })
    }

    /// Contiguous blocks: 1-based observation `i` goes to cluster `ceil(i K / n)`.
    pub fn sequential(n: usize, k: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(invalid("sequential partition needs n >= 1 and K >= 1"));
        }
        if k > n {
            return Err(invalid(format!("cannot split {n} observations into {k} clusters")));
        }
        let assignment = (1..=n).map(|i| (i * k).div_ceil(n) - 1).collect();
        Ok(Self { assignment, k })
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Self::sequential(n, n)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn clusters(&self) -> usize {
        self.k
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Member indices per cluster, in observation order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (i, &c) in self.assignment.iter().enumerate() {
            m[c].push(i);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Hoeffding,
    USharp,
    Bernstein,
    Wald,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeSource {
    Known,
    ResidualRange,
    TwoMean,
    MarginalRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet<T> {
    pub lower: T,
    pub upper: T,
    pub level: T,
    pub method: CiMethod,
    pub range_source: RangeSource,
}

impl<T: Real> ConfidenceSet<T> {
    pub fn new(lower: T, upper: T, level: T, method: CiMethod, range_source: RangeSource) -> Result<Self> {
        if !(lower <= upper) {
            return Err(invalid(format!("confidence set lower {lower} > upper {upper}")));
        }
        if !(level > T::zero() && level < T::one()) {
            return Err(invalid(format!("confidence level {level} outside (0, 1)")));
        }
        Ok(Self {
            lower,
            upper,
            level,
            method,
            range_source,
        })
    }

    /// Symmetric set `center +/- half_width`.
    pub fn centered(center: T, half_width: T, level: T, method: CiMethod, range_source: RangeSource) -> Result<Self> {
        Self::new(center - half_width, center + half_width, level, method, range_source)
    }

    pub fn contains(&self, x: T) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn half_width(&self) -> T {
        (self.upper - self.lower) / (T::one() + T::one())
    }

    pub fn center(&self) -> T {
        (self.upper + self.lower) / (T::one() + T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weights_accept_and_reject() {
        assert!(WeightMatrix::from_row(vec![1.0, 1.0, 1.0]).is_ok());
        assert_eq!(
            WeightMatrix::from_row(vec![0.0, 0.0, 0.0]).unwrap_err(),
            Error::DegenerateWeightRow { row: 0 }
        );
        let id = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(validate_weights(id).is_ok());
        assert!(WeightMatrix::from_row(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn sequential_partition_examples() {
        let p = Partition::sequential(100, 10).unwrap();
        assert_eq!(p.sizes(), vec![10; 10]);
        assert!((0..10).all(|i| p.cluster_of(i) == 0));
        assert_eq!(p.cluster_of(10), 1);
        assert_eq!(Partition::sequential(5, 1).unwrap().sizes(), vec![5]);
        assert_eq!(Partition::sequential(5, 5).unwrap().sizes(), vec![1; 5]);
        assert!(Partition::sequential(5, 6).is_err());
    }

    #[test]
    fn partition_rejects_gaps() {
        assert!(Partition::new(vec![0, 2, 2]).is_err());
        assert_eq!(Partition::new(vec![1, 0, 1]).unwrap().members(), vec![vec![1], vec![0, 2]]);
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.variance, s.range), (2.0, 1.0, 2.0));
        let c = summarize(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!((c.variance, c.range), (0.0, 0.0));
        let sym = summarize(&[-1.0, 1.0]).unwrap();
        assert_eq!((sym.mean, sym.range), (0.0, 2.0));
        assert!(summarize(&[1.0]).is_err());
        assert!(Sample::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn support_ranges() {
        let c = SupportSpec::continuous(-2.0, 2.0).unwrap();
        assert_eq!(c.range(), 4.0);
        let d = SupportSpec::discrete(0.0, 2.0).unwrap();
        assert_eq!(d.range(), 3.0);
        assert!(SupportSpec::continuous(1.0, 1.0).is_err());
    }

    #[test]
    fn confidence_set_invariant() {
        assert!(ConfidenceSet::new(1.0, 0.0, 0.95, CiMethod::Wald, RangeSource::Known).is_err());
    }

    proptest! {
        #[test]
        fn sequential_covers_each_index_once(n in 1usize..400, k_frac in 0.0f64..1.0) {
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let p = Partition::sequential(n, k).unwrap();
            prop_assert_eq!(p.len(), n);
            prop_assert_eq!(p.sizes().iter().sum::<usize>(), n);
            prop_assert!(p.sizes().iter().all(|&s| s >= 1));
            let sizes = p.sizes();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            // contiguous and deterministic
            prop_assert!(p.assignment().windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
            prop_assert_eq!(&p, &Partition::sequential(n, k).unwrap());
        }

        #[test]
        fn summary_scales(xs in proptest::collection::vec(-100.0f64..100.0, 2..50), scale in 0.01f64..100.0) {
            let a = summarize(&xs).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
            let b = summarize(&scaled).unwrap();
            prop_assert!((b.variance - scale * scale * a.variance).abs() <= 1e-9 * (1.0 + b.variance));
            prop_assert!((b.range - scale * a.range).abs() <= 1e-9 * (1.0 + b.range));
        }
    }
}
