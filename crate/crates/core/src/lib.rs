//! Gradient-descent training of infinitely wide networks that contain a
//! finite bottleneck, simulated in function space with deterministic limit
//! kernels, together with the finite-width and Monte-Carlo machinery used to
//! check the limit equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod cli;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod finite;
pub mod kernels;
pub mod linear;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
