//! Exact tools for correlated and Nash equilibria of finite normal-form games.
//!
//! All arithmetic is over the rationals. Profiles are indexed with agent 0
//! varying fastest.

pub mod congestion;
pub mod constructions;
pub mod error;
pub mod game;
pub mod improve;
pub mod linalg;
pub mod nash;
pub mod poly;
pub mod polytope;
pub mod symmetric;

pub use error::{Error, Result};
pub use game::{AnonymousForm, Distribution, Game, JointDist, ProductDist, Support};
pub use linalg::{lp_solve, null_space, q, rank, LpProblem, LpSolution, LpStatus, Rational, RationalMatrix};
pub use poly::Poly;
