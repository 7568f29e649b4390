//! Exact q-series, lattice theta functions and twisted trace functions for
//! lattice vertex operator algebras.

pub mod coset;
pub mod cyclo;
pub mod block;
pub mod error;
pub mod fit;
pub mod fock;
pub mod lattice;
pub mod modforms;
pub mod qseries;
pub mod rational;

pub use cyclo::Cyclo;
pub use error::{Error, Result};
pub use rational::Rational;
