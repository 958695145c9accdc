//! Multi-level MIMO signal detection with the LiGME (Linearly involved
//! Generalized Moreau Enhanced) regularizer and its convexity-preserving
//! proximal splitting solver.

pub mod constellation;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod modifications;
pub mod oracle;
pub mod prox;
pub mod regularizer;
pub mod solver;

pub use error::{Error, Result};
