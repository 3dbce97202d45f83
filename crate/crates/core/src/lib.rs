//! A workbench for finite universal algebra.
//!
//! Finite algebras are operation tables over `{0, .., n-1}`. On top of them
//! the crate computes congruences (with Maltsev-chain explanations),
//! congruence lattices, matrix powers, transformer witnesses for
//! algebraizability, the consequence relation they induce, Maltsev identity
//! schemes, and congruence equations together with their failure
//! certificates.

pub mod algebra;
pub mod algebraize;
pub mod bounds;
pub mod catalog;
pub mod clone;
pub mod cong_eq;
pub mod congruence;
pub mod error;
pub mod format;
pub mod matrix_power;
pub mod relation;
pub mod term;

pub use algebra::{FiniteAlgebra, Signature};
pub use bounds::Bounds;
pub use error::{Error, Result};
pub use relation::{BinRel, Partition};
pub use term::{Assignment, Polynomial, Term};
