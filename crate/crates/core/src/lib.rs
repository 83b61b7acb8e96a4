//! Radial toolkit for the two-dimensional parabolic-elliptic chemotaxis
//! system written in self-similar variables.
//!
//! The crate computes subcritical stationary states by shooting on the
//! cumulated-density equation, the spectrum of the linearized operator,
//! quadratic forms controlling the spectral gap, nonlinear relaxation of
//! radial data, and decreasing rearrangements of general densities.

// Negated comparisons like !(x > 0.0) are deliberate: they reject NaN
// along with the out-of-range values. Index loops are the norm here
// because most stencils touch several arrays at matching offsets.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod evolve;
pub mod forms;
pub mod grid;
pub mod linalg;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod rearrange;
pub mod spectrum;
pub mod verify;

pub use error::{KsError, Result};
pub use grid::{RadialGrid, SpacingRule};
