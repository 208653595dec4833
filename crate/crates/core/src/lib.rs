//! Random fewnomial systems and the statistics of their zeros.
//!
//! The crate samples sparse Gaussian polynomial systems, finds their zeros in
//! the complex torus, and computes the limiting zero densities as Monge-Ampere
//! measures of averaged convex potentials, so the two can be compared.

pub mod ensemble;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod potential;
pub mod quad;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use lattice::{LatticePoint, NewtonPolytope, Spectrum};
