//! Exact rational linear algebra and linear programming.

pub mod lp;
pub mod matrix;
pub mod rational;

pub use lp::{lp_solve, LpProblem, LpSolution, LpStatus};
pub use matrix::{rank_of_rows, null_space, rank, solve, NullSpace, RationalMatrix};
pub use rational::{q, ParseRationalError, Rational};
