//! Small-scale primal-dual interior-point solver for conic programs with
//! free, nonnegative, and PSD blocks.

pub mod program;
pub mod selftest;
pub mod solver;
pub mod svec;

pub use program::{BlockKind, ConicProgram};
pub use solver::{residuals, solve, Residuals, Solution, SolverSettings, Status};
