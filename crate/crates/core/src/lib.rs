//! Generalized k-nearest-neighbour (GkNN) resampling for temporal upscaling.
//!
//! A query series of predictor vectors is turned into a yield series by
//! ranking a training set against each query and drawing one of the ranked
//! records according to a probability distribution over ranks.
//!
//! ```text
//! rank_neighbors()        neighbors.rs   sort training records by metric distance
//! RankDistribution        rank.rs        p_1..p_N over ranks (top-k, harmonic, explicit)
//! SeededSampler           sampler.rs     counter-based uniform stream per (seed, run, t)
//! gknn_simulate()         simulate.rs    one stochastic realisation
//! ```
//!
//! The [`analytics`] module computes the closed-form moments of that process
//! and [`empirical`] checks them against Monte Carlo ensembles. The
//! [`distribution`] module estimates visit frequencies over ranking classes,
//! [`kernel`] runs the kernel convergence experiment, [`upscaling`] holds the
//! NN / kNN / bootstrap method suite and [`tank`] produces training data from
//! a daily rainwater-tank water balance.

pub mod analytics;
pub mod distribution;
pub mod empirical;
pub mod error;
pub mod kernel;
pub mod metric;
pub mod neighbors;
pub mod rank;
pub mod sampler;
pub mod simulate;
pub mod tank;
pub mod types;
pub mod upscaling;

pub use error::{GknnError, Result};
pub use metric::{Metric, MetricSpec};
pub use neighbors::{rank_neighbors, rank_prefix, NeighborRanking};
pub use rank::{RankDistribution, RankKind};
pub use sampler::{sample_rank, SeededSampler};
pub use simulate::{gknn_simulate, RankedSeries};
pub use types::{PredictorVector, TrainingRecord, TrainingSet};
