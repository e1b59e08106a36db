#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod levy_measure;
pub mod drift;
pub mod numerics;
pub mod resolvent;
pub mod rng;
pub mod sampler;
pub mod sde;
pub mod stats;
pub mod test_function;

pub use error::{Error, Result};
