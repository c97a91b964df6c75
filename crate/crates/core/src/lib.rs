//! Bulk, edge and corner compressions of lattice Hamiltonians and their
//! topological invariants.

#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod invariants;
pub mod linalg;
pub mod sparse;
pub mod spectra;
pub mod symbol;
pub mod workflows;

pub use error::{Error, ErrorCategory, Result};
