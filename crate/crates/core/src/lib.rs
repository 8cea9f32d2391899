//! Spectral Galerkin approximation of the inviscid surface quasi-geostrophic
//! equation `∂ₜθ + u·∇θ = 0`, `u = ∇^⊥(-Δ)^{-1/2}θ`, on the Dirichlet square
//! `Ω = (0, π)²`, together with numerical checks of the fractional-operator
//! calculus and commutator estimates that the approximation relies on.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, configuration
//! and the command-line driver live in the companion `sqg-lab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bump;
pub mod commutator;
pub mod convergence;
pub mod eigenbasis;
mod error;
pub mod galerkin;
pub mod grid;
pub mod heat;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result, Warning};
