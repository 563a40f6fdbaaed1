//! Exact multiplicative-group machinery over the rationals and cyclotomic
//! fields: exponent lattices, Kummer degrees and Galois-orbit decisions,
//! covers of the multiplicative group, and finite truncations of Ẑ.

pub mod arith;
pub mod budget;
pub mod cover;
pub mod cyclotomic;
mod error;
pub mod factored;
pub mod galois;
pub mod kummer;
pub mod lattice;
pub mod profinite;
pub mod simplicity;
pub mod torus;
pub mod value;

pub use budget::Budgets;
pub use error::{Error, Result};
pub use factored::{factor, FactoredRational};
