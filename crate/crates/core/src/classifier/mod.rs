//! Desk-scale convolutional keyword classifier and its trainer.

mod checkpoint;
mod eval;
mod model;
mod stats;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, AFBM_MAGIC, AFBM_VERSION};
pub use eval::{evaluate, EvalResult};
pub use model::{
    argmax, forward, init_model, loss_and_gradients, softmax, Architecture, Example, Gradients, SmallNet, IS_WEIGHT,
    TENSOR_NAMES,
};
pub use stats::{confidence_interval, mean, student_t_quantile};
pub use train::{train, EpochStats, TrainConfig};
