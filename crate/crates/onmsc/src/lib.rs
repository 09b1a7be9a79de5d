//! Multi-view spectral clustering toolkit.
//!
//! The crate clusters datasets that describe the same `n` samples through
//! several views (feature matrices or precomputed affinities). Two solvers
//! share the machinery:
//!
//! * [`early_fusion`] learns a single low-rank consensus graph jointly with
//!   per-view weights and reads the clustering off its spectrum.
//! * [`late_fusion`] first embeds every view (and every graph order) on its
//!   own, then aligns the per-view partitions to a consensus partition with
//!   orthogonal rotations and learned view weights.
//!
//! Supporting modules provide graph construction ([`graph`]), dense spectral
//! linear algebra with a randomized/Nystrom fast path ([`linalg`]),
//! simplex-constrained quadratic programming ([`qp`]), k-means and external
//! cluster metrics ([`eval`]), and an experiment pipeline with dataset I/O,
//! baselines, grid search, and report emission ([`dataset`], [`synth`],
//! [`experiment`], [`report`]).
//!
//! All numerical kernels are generic over the scalar type through
//! [`Scalar`]; `f64` aliases for the common types live at the crate root.

pub mod dataset;
pub mod early_fusion;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod late_fusion;
pub mod linalg;
pub mod mem;
pub mod qp;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` affinity matrix, the default for the pipeline.
pub type Affinity64 = graph::AffinityMatrix<f64>;
/// `f64` normalized Laplacian.
pub type Laplacian64 = graph::LaplacianMatrix<f64>;
/// `f64` feature view.
pub type FeatureView64 = graph::FeatureView<f64>;
/// `f64` orthonormal partition matrix.
pub type Partition64 = linalg::Partition<f64>;
/// `f64` eigenpair bundle.
pub type EigenPair64 = linalg::EigenPair<f64>;
/// `f64` simplex weight vector.
pub type SimplexWeights64 = qp::SimplexWeights<f64>;
/// `f32` affinity matrix, for callers that trade precision for memory.
pub type Affinity32 = graph::AffinityMatrix<f32>;
/// `f32` orthonormal partition matrix.
pub type Partition32 = linalg::Partition<f32>;
