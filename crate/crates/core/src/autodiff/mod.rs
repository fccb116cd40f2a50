//! Dense reverse-mode differentiation over a fixed primitive vocabulary.

mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, grad_check_coords, MIN_SAMPLED_COORDS};
pub use params::{glorot, AdamConfig, Param, ParamSet};
pub use tape::{param_grads, Gradients, Tape, Var};
pub use tensor::Tensor;
