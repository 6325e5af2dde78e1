//! Inference for additive statistics under dense dependence.
//!
//! The math modules are generic over [`Real`] (`f32` or `f64`). The
//! simulation harness and the analysis pipeline are `f64` only; the aliases
//! below name the `f64` instantiations used throughout the binaries.

// `!(x > 0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod simulation;
pub mod special;
pub mod uclass;
pub mod variance;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type WeightMatrix = model::WeightMatrix<f64>;
pub type SupportSpec = model::SupportSpec<f64>;
pub type DependencySummary = model::DependencySummary<f64>;
pub type ConfidenceSet = model::ConfidenceSet<f64>;
pub type Sample = model::Sample<f64>;
pub type RegressionFit = estimators::RegressionFit<f64>;
pub type CorrelationMatrix = linalg::CorrelationMatrix<f64>;
pub type VarianceDecomposition = variance::VarianceDecomposition<f64>;
pub type UDiagnosticsReport = uclass::UDiagnosticsReport<f64>;
pub type TailBound = concentration::TailBound<f64>;
