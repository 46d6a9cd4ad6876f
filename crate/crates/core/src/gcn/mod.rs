//! Graph convolutional classifier with analytic gradients and SGD training.

mod checkpoint;
mod matrix;
mod model;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use matrix::DenseMatrix;
pub use model::{
    normalize_adjacency, ActivationTrace, GcnModel, Gradients, GraphInput, Layer, ModelConfig, Prediction, Readout,
    N_CLASSES,
};
pub use train::{loss_and_gradients, train, LabeledGraph, TrainingOutcome};

#[derive(Debug, thiserror::Error)]
pub enum GcnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("adjacency is not symmetric at ({row}, {col})")]
    AsymmetricInput { row: usize, col: usize },
    #[error("negative or NaN edge weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss at epoch {epoch}, batch {batch} (lr {lr})")]
    NonFiniteLoss { epoch: usize, batch: usize, lr: f64 },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
