//! Smooth compactly supported majorants whose Riesz transforms are Lipschitz,
//! assembled from regularized families of dyadic squares.

pub mod bump;
pub mod cup;
pub mod dyadic;
pub mod error;
pub mod function;
pub mod global;
pub mod local;
pub mod quadrature;
pub mod regularize;
pub mod render;
pub mod report;
pub mod riesz;
pub mod scenario;
pub mod tail;

pub use dyadic::{DyadicSquare, Rational, Relation, Square};
pub use error::{Error, Result};
pub use tail::{TailFamily, TailParameters};
