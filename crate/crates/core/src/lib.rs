//! Travelling circular vortex pairs of the generalized surface
//! quasi-geostrophic (gSQG) equation.
//!
//! The crate computes maximizers of the penalized energy
//! `E(omega) - (1/2 lambda) int omega^2` over nonnegative vorticity on the
//! upper half-plane with prescribed impulse `int x2 omega = mu` and mass at most
//! `nu`, together with the diagnostics and the pseudo-spectral evolution used
//! to probe their orbital stability.
//!
//! Everything is generic over the scalar type ([`Real`] is implemented for
//! `f32` and `f64`); the `*64` aliases below fix `f64`.

// `!(x > 0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod fft2;
mod real;

pub mod evolution;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod kernel;
pub mod lamb;
pub mod params;
pub mod solver;
pub mod special;
pub mod steiner;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Field, FieldKind};
pub use grid::Grid;
pub use kernel::{green_half_plane, riesz_coefficient, KernelTensor};
pub use params::{Multipliers, Params, Regime, SolutionRecord};
pub use real::Real;

pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type Params64 = Params<f64>;
pub type KernelTensor64 = KernelTensor<f64>;
pub type SolutionRecord64 = SolutionRecord<f64>;
