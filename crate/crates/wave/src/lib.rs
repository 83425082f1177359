//! Wave-structure interaction on one-dimensional shallow water.
//!
//! * [`piston`]: a spring-mounted lateral piston driving a channel.
//! * [`floating`]: a body resting on the surface, fixed, moved along a
//!   prescribed trajectory, or floating freely.
//! * [`lid`]: profiles of the underside of a body and the graph of the
//!   displaced lid.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod floating;
pub mod lid;
pub mod piston;

pub use error::WaveError;
