//! Trainable SeLU vector field, Adam, and the conditional flow matching loop.

mod adam;
pub mod checkpoint;
mod net;
mod train;

pub use adam::{Adam, AdamConfig};
pub use net::{selu, MlpField, SELU_ALPHA, SELU_LAMBDA};
pub use train::{
    cfm_loss_and_grad, draw_cfm_batch, loss_and_grad, train_cfm, train_from, windowed_medians, CfmBatch,
    LossPoint, NetConfig, TimeSampling, TrainConfig, TrainOutcome,
};
