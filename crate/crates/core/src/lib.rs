// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod criterion;
pub mod cutoff;
pub mod error;
pub mod geometry;
pub mod model;
pub mod symmetry;
pub mod thermal;

pub use error::{Error, Result};
