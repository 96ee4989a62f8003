//! Forced symmetry breaking of the generic S_k-equivariant bifurcation on the
//! standard representation.

pub mod cli;
pub mod continuation;
pub mod dynamics;
pub mod equivariants;
pub mod error;
pub mod family;
pub mod rep;
pub mod spectrum;
pub mod symbreak;

pub use error::{Error, Result};
