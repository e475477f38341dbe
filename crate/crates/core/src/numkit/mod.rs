//! Numeric core: tensors, the actor-critic network, Adam, categorical
//! helpers and the counter-based RNG.

pub mod adam;
pub mod dist;
pub mod loss;
pub mod net;
pub mod rng;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use dist::{argmax, categorical_sample, log_prob_entropy, log_softmax_row};
pub use loss::{backward, ppo_loss, LossBatch, LossCoefs, LossStats};
pub use net::{forward, forward_cached, Arch, Input, ParamSet};
pub use rng::RngStream;
pub use tensor::{Scalar, Tensor};
