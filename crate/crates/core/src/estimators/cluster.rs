use serde::Serialize;

use super::RegressionFit;
use crate::error::{invalid, Error, Result};
use crate::model::Partition;
use crate::scalar::{lit, Real};

/// Cluster-robust variance estimate for one coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterVarianceEstimate<T> {
    pub value: T,
    pub partition: Partition,
    /// `(sum_{j in k} W_sj e_j)^2` per cluster.
    pub contributions: Vec<T>,
}

/// `C_s = sum_k (sum_{j in k} W_sj e_j)^2`.
pub fn cluster_robust<T: Real>(fit: &RegressionFit<T>, partition: &Partition, s: usize) -> Result<ClusterVarianceEstimate<T>> {
    if partition.len() != fit.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} observations, fit has {}",
            partition.len(),
            fit.n()
        )));
    }
    if s >= fit.p() {
        return Err(invalid(format!("coefficient {s} out of range")));
    }
    let mut sums = vec![T::zero(); partition.clusters()];
    for (i, z) in fit.weighted_residuals(s).into_iter().enumerate() {
        let k = partition.cluster_of(i);
        sums[k] = sums[k] + z;
    }
    let contributions: Vec<T> = sums.into_iter().map(|v| v * v).collect();
    Ok(ClusterVarianceEstimate {
        value: contributions.iter().copied().sum(),
        partition: partition.clone(),
        contributions,
    })
}

/// Ranking of candidate partitions by estimated variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionComparison<T> {
    pub values: Vec<T>,
    /// `values[a] - values[b]`.
    pub differences: Vec<Vec<T>>,
    /// Partition indices by decreasing value; ties keep input order.
    pub ranking: Vec<usize>,
    pub recommended: usize,
    /// Pairs `(a, b)`, `a < b`, whose values agree within tolerance.
    pub ties: Vec<(usize, usize)>,
}

/// Evaluates `C_s` for each partition and recommends the largest.
pub fn partition_compare<T: Real>(
    fit: &RegressionFit<T>,
    partitions: &[Partition],
    s: usize,
) -> Result<PartitionComparison<T>> {
    if partitions.len() < 2 {
        return Err(invalid("partition comparison needs at least two partitions"));
    }
    let values = partitions
        .iter()
        .map(|p| cluster_robust(fit, p, s).map(|e| e.value))
        .collect::<Result<Vec<T>>>()?;
    let scale = values.iter().copied().fold(T::zero(), |a, b| a.max(b.abs()));
    let tol = lit::<T>(1e-10) * scale;
    let k = values.len();
    let differences = (0..k).map(|a| (0..k).map(|b| values[a] - values[b]).collect()).collect();
    let mut ties = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if (values[a] - values[b]).abs() <= tol {
                ties.push((a, b));
            }
        }
    }
    let mut ranking: Vec<usize> = (0..k).collect();
    ranking.sort_by(|&a, &b| {
        if (values[a] - values[b]).abs() <= tol {
            std::cmp::Ordering::Equal
        } else {
            values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let recommended = (0..k).find(|&a| max - values[a] <= tol).unwrap_or(0);
    Ok(PartitionComparison {
        values,
        differences,
        ranking,
        recommended,
        ties,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRange<T> {
    pub value: T,
    /// All weighted residuals are equal.
    pub degenerate: bool,
}

/// `max_i W_si e_i - min_i W_si e_i`.
pub fn residual_range<T: Real>(fit: &RegressionFit<T>, s: usize) -> Result<ResidualRange<T>> {
    if fit.n() < 2 {
        return Err(Error::InsufficientData("residual range needs n >= 2".into()));
    }
    if s >= fit.p() {
        return Err(invalid(format!("coefficient {s} out of range")));
    }
    Ok(range_of(&fit.weighted_residuals(s)))
}

pub(crate) fn range_of<T: Real>(z: &[T]) -> ResidualRange<T> {
    let (lo, hi) = z
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let value = hi - lo;
    let degenerate = value == T::zero();
    if degenerate {
        log::warn!("weighted residuals have no spread; residual range is 0");
    }
    ResidualRange { value, degenerate }
}
