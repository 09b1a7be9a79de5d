//! Turning embeddings into labels and scoring them.
//!
//! The embedding rows produced by either solver are clustered with
//! restarted k-means, and the resulting labels are scored against ground
//! truth with accuracy (best label matching), normalized mutual
//! information, and purity.

mod kmeans;
mod metrics;

pub use kmeans::{kmeans, KmeansConfig, KmeansResult};
pub use metrics::{accuracy, hungarian, nmi, purity};
