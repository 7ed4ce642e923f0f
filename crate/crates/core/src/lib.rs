// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod sampling;
pub mod environment;
pub mod partition;
pub mod conditioned_walk;
pub mod limit_law;
pub mod p2p;
pub mod registry;
pub mod acceptance;

pub use error::{Error, Result};
