//! Numerical laboratory for the Muskat free-boundary problem.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numerics:
//!
//! - [`spectral`]: periodic Fourier substrate (transforms, multipliers,
//!   Sobolev norms, Littlewood-Paley blocks, dealiasing).
//! - [`geometry`]: fluid-domain descriptions, straightening maps
//!   `(x, z) -> (x, rho(x, z))` and the divergence-form coefficients.
//! - [`dirichlet_neumann`]: the mapped elliptic solver and the
//!   Dirichlet-Neumann operator `G(eta) f` together with `B` and `V`.
//! - [`paradiff`]: discrete paradifferential calculus (quantization,
//!   paraproducts, Bony remainder, paralinearization diagnostics,
//!   parabolic marching).
//! - [`two_phase`]: interface potentials `f+-` and Rayleigh-Taylor fields.
//! - [`evolution`]: semi-implicit and RK4 interface evolution with monitors.
//!
//! IO, configuration and the command line live in the `muskat-lab` crate.
#![no_std]

extern crate alloc;

pub mod dirichlet_neumann;
mod error;
pub mod evolution;
pub mod geometry;
pub mod krylov;
pub mod paradiff;
pub mod spectral;
pub mod two_phase;

pub use error::{Error, Result};
