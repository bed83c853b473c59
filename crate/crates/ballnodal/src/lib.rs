//! Numerics for sign-changing bubble solutions of the almost critical
//! problem `-Δu = |u|^{2*-2-ε} u` on the unit ball.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: Green and Robin functions of the ball, bubbles, projected bubbles.
//! * [`reduced`]: the reduced energy `F(λ, μ, ρ)` and the functions built on it.
//! * [`critical`]: the radii `ρ₀ < ρ₁ < ρ₂` and their Morse data.
//! * [`audit`]: inequality checks with explicit margins.
//! * [`profile`]: limit profiles, boundary normal-derivative classification, field export.
//! * [`pde`]: axisymmetric finite differences, Newton and ε-continuation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
mod compensated;
pub mod critical;
mod error;
pub mod field;
pub mod format;
pub mod geometry;
pub mod pde;
pub mod profile;
pub mod reduced;

pub use error::{Error, Result};

/// `(√5 − 1)/2`, the radius where `1 − ρ² = ρ`.
pub const RHO_BAR: f64 = 0.618_033_988_749_894_9;

/// Offset kept from `ρ₀` and from `1` in every scan.
pub const GUARD: f64 = 1e-6;
