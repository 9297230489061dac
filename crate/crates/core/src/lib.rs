//! Ordered abelian groups given as finite lexicographic sums of ℤ, ℚ, ℚ_(p)
//! and p-local spans of square roots, with congruence/order formulas in one
//! variable over them.

pub mod arith;
pub mod cli;
pub mod convex;
pub mod error;
pub mod formula;
pub mod group;
pub mod patterns;
pub mod solver;
pub mod syntax;

pub use error::{OagError, Result};
