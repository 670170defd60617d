//! Curved A∞ algebras of Lagrangian torus fibers over relative Novikov rings,
//! their Koszul duals, and the matrix factorizations they produce.
//!
//! The toric model is generated from moment-polytope data by the divisor
//! equation and completed on higher wedge degrees by solving the A∞
//! relations exactly.

pub mod ainfty;
pub mod error;
pub mod family;
pub mod graded;
pub mod koszul;
pub mod mc;
pub mod novikov;
pub mod toric;

pub use error::{Error, Result};
