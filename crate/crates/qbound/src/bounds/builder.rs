//! Incremental conic-program builder.
//!
//! Variables are handed out as opaque ids during assembly; `build` lays
//! them out as [free | nonneg | psd blocks] columns, resolves every
//! expression, and emits the standard-form program.

use nalgebra::{DMatrix, DVector};

use crate::conic::svec::{svec_dim, svec_index, SQRT2};
use crate::conic::{BlockKind, ConicProgram};

use super::expr::{LinExpr, QuadExpr, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Free,
    NonNeg,
    /// entry of psd block `block` at svec position `pos`
    PsdEntry { block: usize, pos: usize },
}

/// Handle to a PSD matrix variable.
#[derive(Debug, Clone, Copy)]
pub struct PsdVar {
    pub block: usize,
    pub order: usize,
    first: usize,
}

impl PsdVar {
    /// Matrix entry (i, j) as an expression (svec columns are descaled).
    pub fn entry(&self, i: usize, j: usize) -> LinExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let id = VarId(self.first + svec_index(self.order, i, j));
        if i == j {
            LinExpr::var(id)
        } else {
            LinExpr::scaled_var(id, 1.0 / SQRT2)
        }
    }

    pub fn svec_ids(&self) -> std::ops::Range<usize> {
        self.first..self.first + svec_dim(self.order)
    }
}

#[derive(Debug, Default)]
pub struct ProgramBuilder {
    kinds: Vec<VarKind>,
    names: Vec<String>,
    psd_orders: Vec<usize>,
    rows: Vec<LinExpr>,
    row_names: Vec<String>,
    objective: Vec<(VarId, f64)>,
}

/// Built program plus the id-to-column map needed to read solutions back.
pub struct BuiltProgram {
    pub program: ConicProgram,
    pub col_of: Vec<usize>,
    /// row order is preserved: row i of the program is builder row i
    pub num_rows: usize,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn free_var(&mut self, name: impl Into<String>) -> VarId {
        self.kinds.push(VarKind::Free);
        self.names.push(name.into());
        VarId(self.kinds.len() - 1)
    }

    pub fn nonneg_var(&mut self, name: impl Into<String>) -> VarId {
        self.kinds.push(VarKind::NonNeg);
        self.names.push(name.into());
        VarId(self.kinds.len() - 1)
    }

    pub fn free_vars(&mut self, prefix: &str, n: usize) -> Vec<VarId> {
        (0..n).map(|i| self.free_var(format!("{prefix}[{i}]"))).collect()
    }

    pub fn nonneg_vars(&mut self, prefix: &str, n: usize) -> Vec<VarId> {
        (0..n).map(|i| self.nonneg_var(format!("{prefix}[{i}]"))).collect()
    }

    pub fn psd_var(&mut self, name: &str, order: usize) -> PsdVar {
        let block = self.psd_orders.len();
        self.psd_orders.push(order);
        let first = self.kinds.len();
        for pos in 0..svec_dim(order) {
            self.kinds.push(VarKind::PsdEntry { block, pos });
            self.names.push(format!("{name}#{pos}"));
        }
        PsdVar {
            block,
            order,
            first,
        }
    }

    /// Adds the equality `expr == 0`.
    pub fn eq_zero(&mut self, mut expr: LinExpr, name: impl Into<String>) -> usize {
        expr.compact();
        self.rows.push(expr);
        self.row_names.push(name.into());
        self.rows.len() - 1
    }

    /// Couples a PSD variable to a quadratic expression: Z == M(quad),
    /// where M(q) = [[Q, c], [c', c0]] of order n+1. Off-diagonal rows are
    /// sqrt(2)-scaled. Returns the range of emitted row indices (svec order).
    pub fn couple_psd_to_matrix_rep(
        &mut self,
        z: &PsdVar,
        quad: &QuadExpr,
        tag: &str,
    ) -> std::ops::Range<usize> {
        let n = quad.n;
        assert_eq!(z.order, n + 1);
        let start = self.rows.len();
        for i in 0..=n {
            for j in i..=n {
                let entry_expr = if i < n && j < n {
                    quad.q_entry(i, j).clone()
                } else if i < n && j == n {
                    quad.c[i].clone()
                } else {
                    quad.c0.clone()
                };
                let mut row = entry_expr;
                if i != j {
                    row.scale(SQRT2);
                    row.add_var(VarId(z.first + svec_index(z.order, i, j)), -1.0);
                } else {
                    row.add_var(VarId(z.first + svec_index(z.order, i, j)), -1.0);
                }
                self.eq_zero(row, format!("{tag}[{i},{j}]"));
            }
        }
        start..self.rows.len()
    }

    /// Minimize the given linear objective.
    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms;
    }

    pub fn len_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn build(mut self) -> BuiltProgram {
        let nvars = self.kinds.len();
        let mut col_of = vec![usize::MAX; nvars];
        let mut col = 0;
        // free arena
        for (i, k) in self.kinds.iter().enumerate() {
            if matches!(k, VarKind::Free) {
                col_of[i] = col;
                col += 1;
            }
        }
        let free_dim = col;
        // nonneg arena
        for (i, k) in self.kinds.iter().enumerate() {
            if matches!(k, VarKind::NonNeg) {
                col_of[i] = col;
                col += 1;
            }
        }
        let nonneg_dim = col - free_dim;
        // psd blocks in creation order; entries are already contiguous ids
        for (i, k) in self.kinds.iter().enumerate() {
            if let VarKind::PsdEntry { .. } = k {
                col_of[i] = col;
                col += 1;
            }
        }
        assert_eq!(col, nvars);

        let mut blocks = Vec::new();
        if free_dim > 0 {
            blocks.push(BlockKind::Free { dim: free_dim });
        }
        if nonneg_dim > 0 {
            blocks.push(BlockKind::NonNeg { dim: nonneg_dim });
        }
        for &order in &self.psd_orders {
            blocks.push(BlockKind::Psd { order });
        }

        let mut names = vec![String::new(); nvars];
        for (i, name) in self.names.drain(..).enumerate() {
            names[col_of[i]] = name;
        }

        let nrows = self.rows.len();
        let mut a = DMatrix::zeros(nrows, nvars);
        let mut b = DVector::zeros(nrows);
        for (r, expr) in self.rows.iter().enumerate() {
            b[r] = -expr.constant;
            for &(v, cfac) in &expr.terms {
                a[(r, col_of[v.0])] += cfac;
            }
        }

        let mut c = DVector::zeros(nvars);
        for &(v, cf) in &self.objective {
            c[col_of[v.0]] += cf;
        }

        let program = ConicProgram {
            c,
            a,
            b,
            blocks,
            names,
        };
        program.validate();
        BuiltProgram {
            program,
            col_of,
            num_rows: nrows,
        }
    }
}

impl BuiltProgram {
    pub fn value_of(&self, x: &[f64], expr: &LinExpr) -> f64 {
        expr.constant
            + expr
                .terms
                .iter()
                .map(|&(v, c)| c * x[self.col_of[v.0]])
                .sum::<f64>()
    }

    pub fn var_value(&self, x: &[f64], v: VarId) -> f64 {
        x[self.col_of[v.0]]
    }
}
