//! Bayesian polynomial chaos surrogates trained jointly on simulator runs and
//! real-world observations.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod basis;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod metrics;
pub mod model;
pub mod predict;
pub mod sampler;
pub mod train;

pub use error::{Error, Result};
