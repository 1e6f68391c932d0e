//! Conic standard form: minimize c'x subject to Ax = b and x in a product
//! of free, nonnegative, and PSD (svec) blocks.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::svec::svec_dim;

/// One factor of the cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    /// Unconstrained coordinates.
    Free { dim: usize },
    /// Componentwise nonnegative coordinates.
    NonNeg { dim: usize },
    /// svec of a PSD matrix of the given order.
    Psd { order: usize },
}

impl BlockKind {
    pub fn dim(&self) -> usize {
        match *self {
            BlockKind::Free { dim } | BlockKind::NonNeg { dim } => dim,
            BlockKind::Psd { order } => svec_dim(order),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, BlockKind::Free { .. })
    }
}

/// Standard-form conic program with a variable name table for certificate
/// extraction.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub blocks: Vec<BlockKind>,
    pub names: Vec<String>,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) {
        let total: usize = self.blocks.iter().map(|b| b.dim()).sum();
        assert_eq!(total, self.num_vars(), "cone dimension != column count");
        assert_eq!(self.a.ncols(), self.num_vars());
        assert_eq!(self.a.nrows(), self.num_rows());
        assert_eq!(self.names.len(), self.num_vars());
    }

    /// Self-describing JSON dump of the standard form, for cross-checking
    /// against external solvers.
    pub fn dump_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            description: &'static str,
            objective: Vec<f64>,
            equality_matrix: Vec<Vec<f64>>,
            equality_rhs: Vec<f64>,
            blocks: &'a [BlockKind],
            names: &'a [String],
        }
        let dump = Dump {
            description: "min c'x s.t. Ax=b, x in product of blocks; PSD blocks in svec form (off-diagonals scaled by sqrt(2))",
            objective: self.c.iter().cloned().collect(),
            equality_matrix: (0..self.a.nrows())
                .map(|i| (0..self.a.ncols()).map(|j| self.a[(i, j)]).collect())
                .collect(),
            equality_rhs: self.b.iter().cloned().collect(),
            blocks: &self.blocks,
            names: &self.names,
        };
        serde_json::to_string_pretty(&dump).expect("program dump")
    }
}
