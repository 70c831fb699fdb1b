//! Gaussian wave packet dynamics in the semiclassical, Hagedorn and
//! first-variation formulations, with Noether conservation checks.
//!
//! The reduced state `(q, p, A, B)` lives in `T*ℝ^d × Σ_d`, where `Σ_d` is
//! the Siegel upper half space of complex symmetric `C = A + iB` with `B`
//! positive-definite. Rotations act by `Γ_R(q, p, A, B) = (Rq, Rp, RARᵀ,
//! RBRᵀ)`; for rotation-invariant potentials the semiclassical angular
//! momentum `J_ħ = q ⋄ p − (ħ/2)[B⁻¹, A]` is conserved while `J₀ = q ⋄ p`
//! generally is not.

pub mod cli;
pub mod conservation;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrators;
pub mod potentials;
pub mod sampling;
pub mod wavepacket;

pub use error::{GwpError, Result};
