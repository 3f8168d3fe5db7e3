// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod field;
pub mod graph;
pub mod kernels;
pub mod macroscopic;
pub mod micro;
pub mod operator;
pub mod rng;

pub use error::{Error, Result};
