//! Class-accuracy imbalance metrics and post-hoc debiasing of classifier
//! probabilities.
//!
//! A classifier's probability outputs are corrected by multiplying each
//! class probability with a coefficient chosen from a discrete `K`-point
//! scale. The coefficients are learned on a labelled optimization set by
//! simulated annealing over an objective that trades error rate against
//! COBias (the mean pairwise gap between per-class accuracies) and a
//! smoothed PMI term.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod anneal;
pub mod artifact;
pub mod baselines;
pub mod data;
pub mod error;
pub mod inference;
pub mod metrics;
pub mod objective;
pub mod oracle;
pub mod scalar;
pub mod synthetic;
pub mod weights;

pub use anneal::{
    anneal, perturb, predicted_complexity, AnnealOutcome, AnnealSchedule, AnnealTrace,
};
pub use artifact::{Provenance, ReweightArtifact};
pub use baselines::{batch_calibrate, compare_methods};
pub use data::{load_dataset, DataFormat, ProbabilityDataset};
pub use error::{Error, Result};
pub use metrics::{ClassAccuracyReport, ConfusionMatrix, MetricsReport};
pub use objective::{evaluate, IncrementalEvaluator, ObjectiveConfig, ObjectiveValue, Terms};
pub use oracle::enumerate_optimum;
pub use scalar::Scalar;
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use weights::{WeightScale, WeightSelection};

pub type Dataset = ProbabilityDataset<f64>;
pub type Scale = WeightScale<f64>;
pub type Config = ObjectiveConfig<f64>;
pub type Value = ObjectiveValue<f64>;
pub type Artifact = ReweightArtifact<f64>;
pub type Report = MetricsReport<f64>;

pub type Dataset32 = ProbabilityDataset<f32>;
pub type Scale32 = WeightScale<f32>;
pub type Config32 = ObjectiveConfig<f32>;
pub type Artifact32 = ReweightArtifact<f32>;
