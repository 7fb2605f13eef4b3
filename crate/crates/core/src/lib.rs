//! Movable-antenna over-the-air computation.
//!
//! A receiver with `M` antennas that can move inside an `A x A` square
//! collects the sum of `K` users' symbols. The crate models the
//! field-response channel of such an array, minimizes the computation mean
//! squared error (CMSE) over antenna positions, receive combiner and
//! transmit coefficients with a particle swarm around a closed-form inner
//! loop, and provides the fixed-array, SCA-based alternating optimization
//! and grid-selection baselines together with an experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aircomp;
pub mod benchmarks;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod pso;
pub mod sca;
pub mod seed;

pub use error::{Error, Result};
