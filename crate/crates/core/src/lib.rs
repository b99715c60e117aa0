//! Discrete complex analysis on square and hexagonal lattices, with the
//! preholomorphic observables of the critical Ising and O(N) loop models.

pub mod contours;
pub mod dca;
pub mod error;
pub mod ising;
pub mod lattice;
pub mod onmodel;
pub mod scaling;
pub mod sparse;

pub use error::{Error, Result};
pub use lattice::{LatticeDomain, LatticeKind};
