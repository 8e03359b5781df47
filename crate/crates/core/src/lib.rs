//! Graph canonical correlation analysis (gCCA).
//!
//! The pipeline standardizes two data matrices, thresholds their
//! cross-correlation matrix into a weighted bipartite graph, extracts dense
//! biclique subgraphs with a greedy row/column exclusion sweep, picks the
//! density penalty by a Bernoulli block-model KL criterion and finally
//! estimates the first canonical pair on the selected variables.
//!
//! Modules:
//! - [`data`]: ingestion, standardization, cross-correlation, thresholding.
//! - [`extraction`]: the penalized block objective and the greedy sweep.
//! - [`tuning`]: KL-divergence selection of the density penalty.
//! - [`estimation`]: canonical vectors, canonical correlation, full fit.
//! - [`synthgen`]: planted-biclique Gaussian data via a latent factor.
//! - [`metrics`]: recovery scores and Monte-Carlo study aggregation.
//! - [`oracle`]: brute-force references used by tests and `oracle-check`.

pub mod data;
pub mod error;
pub mod estimation;
pub mod extraction;
pub mod metrics;
pub mod oracle;
pub mod synthgen;
pub mod tuning;

pub use data::{CorrelationGraph, RawMatrix, StandardizedMatrix};
pub use error::{Error, Result};
pub use estimation::{GccaConfig, GccaFit};
pub use extraction::{Biclique, BicliqueSet, ExclusionTrajectory};
pub use metrics::{RecoveryScore, SimReport};
pub use synthgen::{PlantedTruth, SimConfig};
pub use tuning::KlScore;

/// Library version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
