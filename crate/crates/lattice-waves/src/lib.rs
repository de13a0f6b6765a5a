//! Traveling waves in diatomic Fermi–Pasta–Ulam–Tsingou lattices.
//!
//! The crate covers the near-sonic regime of mass and spring dimers:
//!
//! * [`dispersion`] — the dispersion relation, the speed of sound and the
//!   critical ripple frequency;
//! * [`state_space`] — the first-order (spatial-dynamics) formulation, its
//!   spectral projection and coefficient functionals;
//! * [`invariants`] — the first integral and the nondegeneracy constants of
//!   the center-manifold reduction;
//! * [`profiles`] — leading-order solitary, front and periodic profiles;
//! * [`beale`] — numerical nanopteron and periodic traveling-wave solvers;
//! * [`simulate`] — direct time integration of the lattice.

pub mod beale;
pub mod cheb;
pub mod dispersion;
pub mod error;
pub mod invariants;
pub mod params;
pub mod profiles;
pub mod quadrature;
pub mod simulate;
pub mod scalar;
pub mod state_space;

pub use error::{Error, Result};
pub use params::{DimerKind, DimerParams};
