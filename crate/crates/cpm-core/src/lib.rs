//! Computations for the order parameter of the superintegrable chiral Potts
//! model: exact cyclotomic combinatorics, Drinfeld polynomials and their
//! roots, the form-factor sum and its determinant form, and a small-lattice
//! transfer-matrix oracle.

pub mod combi;
pub mod cyclo;
pub mod drinfeld;
pub mod error;
pub mod formfactor;
pub mod lattice;
pub mod util;

pub use error::{CpmError, Result};
