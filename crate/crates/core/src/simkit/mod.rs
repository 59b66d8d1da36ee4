//! Desk-scale experiment substrate: synthetic blobs with injected label noise,
//! a small MLP trainer with a vanilla warm-up phase, and a loss-stream
//! simulator driven by a known mixture.

pub mod dataset;
pub mod mlp;
pub mod stream;
pub mod trainer;

use thiserror::Error;

use crate::metrics::MetricsError;
use crate::selectors::SelectError;
use crate::theory::TheoryError;

pub use dataset::{inject_noise, make_blobs, BlobSpec, NoiseMode, NoisyDataset};
pub use mlp::{MlpModel, ModelConfig};
pub use stream::simulate_stream;
pub use trainer::{train, TrainSchedule};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}, iteration {iteration}")]
    Divergence { epoch: usize, iteration: usize },
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}
