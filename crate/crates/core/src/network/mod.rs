//! Covariance networks: layers, classifier head, exact gradients, ADAM and training.

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod head;
pub mod hvn;
pub mod params;
pub mod train;

pub use activation::{gelu, gelu_grad, Activation};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint};
pub use head::{argmax, cross_entropy, head_forward, mean_pool, softmax, HeadParams};
pub use hvn::{
    hvn_backward, hvn_forward, hvn_layer_forward, match_mlp_width, BagHeadModel, HvnConfig, HvnModel, HvnParams,
    Pooling, Shift, ShiftKind,
};
pub use params::ParamTensors;
pub use train::{evaluate, fit, train, EpochStats, Example, History, Objective, TrainConfig, Trained};
