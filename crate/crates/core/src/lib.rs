// `!(x > 0.0)` is used on purpose throughout so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod inforate;
pub mod mathcore;
pub mod rng;

pub use error::{Error, Result};
