//! Minimal reverse-mode differentiation engine on float-64 tensors.

mod gradcheck;
mod graph;
pub mod init;
mod lstm;
pub mod ops;
mod optim;
mod tensor;

pub use gradcheck::{gradient_check, relative_error, GradCheck, GRADCHECK_FLOOR};
pub use graph::{Gradients, Graph, ParamEntry, ParamId, ParamStore, Var};
pub use lstm::{lstm_forward, Gate, LstmCellParams, FORGET_BIAS_INIT};
pub use ops::{
    dense_forward, dropout, global_average_pool, global_max_pool, weighted_bce, weighted_bce_wide,
    Activation, PROB_CLIP,
};
pub use optim::{AdamConfig, OptimizerState};
pub use tensor::{Mask, Tensor};
