//! Desk-scale optimization of the amplitude model: squared-error loss,
//! exact parameter gradients through the differentiation tape, an
//! adaptive-moment optimizer with stepped learning-rate decay, and
//! checkpointing with bit-exact resume.

mod grad;
mod loss;
mod optim;
mod train;

pub use grad::{gradient, loss_forward};
pub use loss::{amplitude_mae, loss};
pub use optim::OptimizerState;
pub use train::{
    load_checkpoint, save_checkpoint, train, Checkpoint, TrainConfig, TrainError, TrainingSample,
};
