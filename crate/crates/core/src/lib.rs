#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

//! Kernel for the Poisson cylinder cover process in `R^d`.
//!
//! Everything here is pure computation over `core` + `alloc`: sampling of the
//! time-stamped isometry-invariant line process restricted to a ball window,
//! hitting measures of pairs of balls, ρ-separated nets, coupled discrete/well
//! cover-time engines and the statistical harness used to check the limit laws.
//! File formats, the CLI and parallel fan-out live in the `cylcover` crate.
//!
//! Cylinders always have radius 1; rescale the target set instead.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cover;
mod error;
pub mod exec;
pub mod lineproc;
pub mod measure;
pub mod net;
pub mod rng;
pub mod verify;
pub(crate) mod vecmath;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use rng::{Purpose, StreamKey};
