//! Exact, desk-scale machinery for studying square-free values of integer
//! polynomials: root counts modulo prime powers, certified density constants,
//! exact square-free counts, congruence and lattice point counts, Weyl sums and
//! discrepancy, and seeded averaged-error experiments over polynomial families.

pub mod arith;
pub mod congruence;
pub mod density;
pub mod error;
pub mod experiments;
pub mod expsum;
pub mod lattice;
mod modpoly;
pub mod polynomial;
pub mod roots;
pub mod squarefree;

pub use error::{Error, Result};
pub use polynomial::IntPolynomial;
