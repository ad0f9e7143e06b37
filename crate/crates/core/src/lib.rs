//! Exact formal Lie iteration for perturbed quadratic singularities, the
//! majorant-norm machinery that certifies its convergence, and the
//! parameter optimization of the resulting radius.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod defsets;
pub mod normalform;
pub mod norms;
pub mod optim;
pub mod paramopt;
pub mod prisma;
pub mod series;

pub use series::{Rational, TruncSeries};
