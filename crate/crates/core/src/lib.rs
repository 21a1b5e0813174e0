//! Hyperbolic conservation laws with prescribed eigenvector fields.
//!
//! Given a frame of vector fields `R_1..R_n` on a box in state space, the
//! crate builds the system the eigenvalues must satisfy for `R Λ R⁻¹` to be a
//! flux Jacobian, classifies its solution structure, integrates the reduced
//! systems on a grid and reconstructs the flux.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod solver;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
