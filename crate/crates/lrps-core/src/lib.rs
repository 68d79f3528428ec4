//! Laboratory for likelihood-restricted prior sampling (LRPS) inside nested
//! sampling.
//!
//! Nested sampling iteratively discards the worst of `K` live points and
//! replaces it with a fresh prior draw above the discarded likelihood. The
//! quality of that constrained draw is everything: a biased sampler silently
//! corrupts the volume shrinkage that nested sampling relies on. This crate
//! provides the pieces needed to stress-test step samplers in isolation:
//!
//! * [`geometry`] — test problems with analytic enclosed volume at any
//!   likelihood level, so the true shrinkage distribution is known.
//! * [`slice_engine`] — one slice-sampling step (stepping-out with doubling,
//!   shrink-on-reject) with exact model-evaluation accounting.
//! * [`proposals`] — the ten direction-proposal strategies under study.
//! * [`runner`] — the shrinkage harness: runs nested-sampling iterations and
//!   records discarded log-volumes, plus an exact-sampling oracle variant.
//! * [`shrinkage`] — the Beta(K,1) Kolmogorov–Smirnov verification test.
//! * [`calibration`] — doubling search for the number of steps per iteration
//!   across problems of increasing dimension.
//! * [`linalg`] — covariance snapshots, Gram–Schmidt, sphere/ball sampling.

pub mod calibration;
pub mod geometry;
pub mod linalg;
pub mod proposals;
pub mod runner;
pub mod shrinkage;
pub mod slice_engine;

pub use calibration::{
    calibrate_method, desk_suite, full_suite, summarize_scaling, CalibrationRow, ScalingSummary,
    SweepSettings,
};
pub use geometry::{Geometry, GeometryError};
pub use linalg::{gram_schmidt, sample_covariance, CovarianceSnapshot, LinalgError};
pub use proposals::{LiveSet, ProposalKind, ProposalState};
pub use runner::{run_shrinkage, run_shrinkage_oracle, RunConfig, RunError, ShrinkageRecord};
pub use shrinkage::{ks_uniform_test, volume_ratios, ShrinkageError, TestVerdict};
pub use slice_engine::{run_chain, slice_step, AdaptiveLength, SliceOutcome};

/// A point in prior-parameter space. Length equals the problem dimension,
/// all coordinates finite.
pub type Point = Vec<f64>;

/// Target interface seen by the step engine: a log-likelihood over a
/// (possibly bounded) uniform prior.
///
/// Support checks are free geometry tests; only `log_likelihood` calls count
/// as model evaluations.
pub trait Model {
    fn dim(&self) -> usize;
    fn log_likelihood(&self, x: &[f64]) -> f64;
    fn in_support(&self, x: &[f64]) -> bool;
}
