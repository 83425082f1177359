//! Core numerics for one-dimensional strictly hyperbolic 2x2 quasilinear systems
//! posed on domains with fixed, moving or free boundaries.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] and [`system`] define small vectors, matrices and the system trait.
//! * [`hyperbolic`] holds eigenprojectors, Kreiss symmetrizers, the Lopatinskii
//!   scalar and the Alinhac good unknown; [`norms`] evaluates weighted norms.
//! * [`grid`] implements the Lagrangian and cutoff diffeomorphisms.
//! * [`solver`] is the finite-volume stepper with characteristic boundary closures.
//! * [`compat`], [`front`] and [`transmission`] build the compatibility checks,
//!   free-boundary drivers and two-sided (interface and shock) problems on top.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compat;
pub mod front;
pub mod grid;
pub mod hyperbolic;
pub mod linalg;
pub mod norms;
pub mod solver;
pub mod system;
pub mod transmission;

pub use linalg::{perp, Mat2, Vec2};
pub use system::{LinearSystem, ShallowWater, ShallowWaterVelocity, System};
