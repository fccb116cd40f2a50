// NaN must fail validation, so several checks are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod cli;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod nets;
pub mod ops;
pub mod spectral;

pub use error::{Error, Result};
