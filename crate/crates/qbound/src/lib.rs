//! Lower-bounding toolkit for nonconvex quadratically constrained quadratic
//! programs.
//!
//! The crate compiles a family of Lagrangian-style bounds (constant, affine,
//! and quadratic multipliers, second-order-cone face certificates, valid
//! cuts, and a cubic tightening) into one conic standard form, solves them
//! with an embedded primal-dual interior-point method, and cross-checks the
//! results against a desk-scale global optimizer.

pub mod bounds;
pub mod certs;
pub mod conic;
pub mod model;
pub mod oracle;

pub use model::{
    factorize_psd, normalize_box, parse_instance, AffineFunction, AffineMap, CubicFunction,
    CubicTensor, Instance, ModelError, QuadraticFunction, SymmetricMatrix,
};
