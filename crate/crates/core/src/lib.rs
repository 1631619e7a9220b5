//! kNN estimators of differential entropy (Kozachenko-Leonenko, plain and
//! truncated) and mutual information (KSG), with a harness that measures
//! their empirical bias and variance convergence rates on distributions with
//! known ground truth.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod knn;
pub mod metrics;
pub mod quadrature;
pub mod report_io;
pub mod sample;
pub mod seeding;
pub mod special;
pub mod sum;

pub use distributions::{DistributionSpec, Draw, PathologicalMixtureLite};
pub use error::{Error, Result};
pub use estimators::{
    entropy_neighbor_stats, kl_entropy, ksg_mi, ksg_neighbor_stats, truncated_kl_entropy, EstimateResult,
    EstimatorConfig, EstimatorKind, NeighborStats, Truncation,
};
pub use knn::{build_index, KnnResult, NeighborIndex};
pub use metrics::{IndexMetric, JointMetric, Metric};
pub use sample::SampleSet;
pub use special::{digamma, log_gamma};
pub use experiments::{
    fit_rates, run_cell, run_experiment, theoretical_rates, CellResult, CellStatus, ConvergenceReport, ExperimentSpec,
    RateModel, Tail, TheoreticalRates,
};
pub use report_io::{load_samples, save_samples, write_report};
