//! Linear expressions over solver variables, and polynomial containers whose
//! coefficients are such expressions.
//!
//! Bound programs are assembled symbolically: every multiplier coefficient is
//! a solver variable, every product against known instance data is linear in
//! those variables, and the final identity rows/PSD couplings are emitted
//! from the resulting expression trees.

use crate::model::{cubic_index, cubic_monomial_count, tri_index, QuadraticFunction};

/// Opaque variable handle assigned by the program builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

/// constant + sum(coeff * var)
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(v: f64) -> Self {
        Self {
            constant: v,
            terms: Vec::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(v, 1.0)],
        }
    }

    pub fn scaled_var(v: VarId, c: f64) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(v, c)],
        }
    }

    pub fn add_assign(&mut self, other: &LinExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.constant += scale * other.constant;
        for &(v, c) in &other.terms {
            self.terms.push((v, scale * c));
        }
    }

    pub fn add_var(&mut self, v: VarId, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }

    pub fn scale(&mut self, t: f64) {
        self.constant *= t;
        for term in &mut self.terms {
            term.1 *= t;
        }
    }

    pub fn plus(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_assign(other, 1.0);
        out
    }

    pub fn minus(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_assign(other, -1.0);
        out
    }

    pub fn times(&self, t: f64) -> LinExpr {
        let mut out = self.clone();
        out.scale(t);
        out
    }

    /// Merge duplicate variable entries (used before emitting rows).
    pub fn compact(&mut self) {
        if self.terms.len() <= 1 {
            return;
        }
        self.terms.sort_by_key(|(v, _)| v.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match out.last_mut() {
                Some((pv, pc)) if *pv == v => *pc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
    }
}

/// Quadratic function with expression coefficients, in the matrix-rep
/// convention x'Qx + 2c'x + c0 (so `q` stores matrix entries, not monomial
/// coefficients).
#[derive(Debug, Clone)]
pub struct QuadExpr {
    pub n: usize,
    pub q: Vec<LinExpr>,
    pub c: Vec<LinExpr>,
    pub c0: LinExpr,
}

impl QuadExpr {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            q: vec![LinExpr::zero(); n * (n + 1) / 2],
            c: vec![LinExpr::zero(); n],
            c0: LinExpr::zero(),
        }
    }

    #[inline]
    pub fn q_entry(&self, i: usize, j: usize) -> &LinExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.q[tri_index(self.n, i, j)]
    }

    #[inline]
    pub fn q_entry_mut(&mut self, i: usize, j: usize) -> &mut LinExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &mut self.q[tri_index(self.n, i, j)]
    }

    pub fn add_assign(&mut self, other: &QuadExpr, scale: f64) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.q.iter_mut().zip(&other.q) {
            a.add_assign(b, scale);
        }
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            a.add_assign(b, scale);
        }
        self.c0.add_assign(&other.c0, scale);
    }

    /// Adds a known quadratic function times a fixed factor.
    pub fn add_known(&mut self, f: &QuadraticFunction, scale: f64) {
        for i in 0..self.n {
            for j in i..self.n {
                self.q[tri_index(self.n, i, j)].constant += scale * f.q.get(i, j);
            }
            self.c[i].constant += scale * f.c[i];
        }
        self.c0.constant += scale * f.c0;
    }

    /// Adds a known quadratic scaled by a variable expression (lambda * g).
    pub fn add_known_times_expr(&mut self, f: &QuadraticFunction, lam: &LinExpr) {
        for i in 0..self.n {
            for j in i..self.n {
                let qv = f.q.get(i, j);
                if qv != 0.0 {
                    self.q[tri_index(self.n, i, j)].add_assign(lam, qv);
                }
            }
            if f.c[i] != 0.0 {
                self.c[i].add_assign(lam, f.c[i]);
            }
        }
        if f.c0 != 0.0 {
            self.c0.add_assign(lam, f.c0);
        }
    }

    /// Adds (f'x + g)(w'x + w0) where (f, g) are expression coefficients and
    /// (w, w0) are known scalars.
    pub fn add_affine_times_known_affine(
        &mut self,
        f: &[LinExpr],
        g: &LinExpr,
        w: &[f64],
        w0: f64,
        scale: f64,
    ) {
        let n = self.n;
        for i in 0..n {
            // diagonal: f_i w_i
            self.q[tri_index(n, i, i)].add_assign(&f[i], scale * w[i]);
            for j in (i + 1)..n {
                let e = self.q[tri_index(n, i, j)].clone();
                let mut e = e;
                e.add_assign(&f[i], scale * 0.5 * w[j]);
                e.add_assign(&f[j], scale * 0.5 * w[i]);
                self.q[tri_index(n, i, j)] = e;
            }
            // 2c'x picks up w0 f + g w
            self.c[i].add_assign(&f[i], scale * 0.5 * w0);
            self.c[i].add_assign(g, scale * 0.5 * w[i]);
        }
        self.c0.add_assign(g, scale * w0);
    }

    pub fn compact(&mut self) {
        for e in self.q.iter_mut().chain(self.c.iter_mut()) {
            e.compact();
        }
        self.c0.compact();
    }
}

/// Cubic function with expression coefficients: monomial tensor plus a
/// quadratic remainder.
#[derive(Debug, Clone)]
pub struct CubicExpr {
    pub n: usize,
    /// monomial coefficient of x_i x_j x_k, multiset order
    pub t: Vec<LinExpr>,
    pub quad: QuadExpr,
}

impl CubicExpr {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            t: vec![LinExpr::zero(); cubic_monomial_count(n)],
            quad: QuadExpr::zero(n),
        }
    }

    /// Adds a(x) * g(x) with a variable affine (f, g0 expressions) and a
    /// known quadratic.
    pub fn add_var_affine_times_known_quad(
        &mut self,
        f: &[LinExpr],
        g0: &LinExpr,
        known: &QuadraticFunction,
        scale: f64,
    ) {
        let n = self.n;
        // cubic: f_a * monomial coefficients of x'Qx
        for i in 0..n {
            for j in i..n {
                let mono = if i == j { known.q.get(i, i) } else { 2.0 * known.q.get(i, j) };
                if mono == 0.0 {
                    continue;
                }
                for (a, fa) in f.iter().enumerate() {
                    let mut idx = [a, i, j];
                    idx.sort_unstable();
                    self.t[cubic_index(n, idx[0], idx[1], idx[2])].add_assign(fa, scale * mono);
                }
            }
        }
        // quadratic: g0*Q + sym(f c'); linear: g0 c + (c0/2) f; const: g0 c0
        for i in 0..n {
            self.quad.q[tri_index(n, i, i)].add_assign(&f[i], scale * 2.0 * known.c[i]);
            self.quad.q[tri_index(n, i, i)].add_assign(g0, scale * known.q.get(i, i));
            for j in (i + 1)..n {
                let idx = tri_index(n, i, j);
                self.quad.q[idx].add_assign(&f[i], scale * known.c[j]);
                self.quad.q[idx].add_assign(&f[j], scale * known.c[i]);
                self.quad.q[idx].add_assign(g0, scale * known.q.get(i, j));
            }
            self.quad.c[i].add_assign(g0, scale * known.c[i]);
            self.quad.c[i].add_assign(&f[i], scale * 0.5 * known.c0);
        }
        self.quad.c0.add_assign(g0, scale * known.c0);
    }

    /// Adds q(x) * (w'x + w0) with a variable quadratic (matrix-rep
    /// expressions) and a known affine.
    pub fn add_var_quad_times_known_affine(
        &mut self,
        quad: &QuadExpr,
        w: &[f64],
        w0: f64,
        scale: f64,
    ) {
        let n = self.n;
        // cubic: monomial coeffs of x'Q^x times w_a
        for i in 0..n {
            for j in i..n {
                let entry = quad.q_entry(i, j);
                if entry.terms.is_empty() && entry.constant == 0.0 {
                    continue;
                }
                let mult = if i == j { 1.0 } else { 2.0 };
                for (a, &wa) in w.iter().enumerate() {
                    if wa == 0.0 {
                        continue;
                    }
                    let mut idx = [a, i, j];
                    idx.sort_unstable();
                    self.t[cubic_index(n, idx[0], idx[1], idx[2])]
                        .add_assign(entry, scale * mult * wa);
                }
            }
        }
        // quadratic: w0*Q^ + sym(c^ w') from (2c^'x)(w'x)
        for i in 0..n {
            self.quad.q[tri_index(n, i, i)].add_assign(quad.q_entry(i, i), scale * w0);
            self.quad.q[tri_index(n, i, i)].add_assign(&quad.c[i], scale * 2.0 * w[i]);
            for j in (i + 1)..n {
                let idx = tri_index(n, i, j);
                self.quad.q[idx].add_assign(quad.q_entry(i, j), scale * w0);
                self.quad.q[idx].add_assign(&quad.c[i], scale * w[j]);
                self.quad.q[idx].add_assign(&quad.c[j], scale * w[i]);
            }
            // linear: w0 * 2c^'x and c^0 * w'x
            self.quad.c[i].add_assign(&quad.c[i], scale * w0);
            self.quad.c[i].add_assign(&quad.c0, scale * 0.5 * w[i]);
        }
        self.quad.c0.add_assign(&quad.c0, scale * w0);
    }

    pub fn compact(&mut self) {
        for e in self.t.iter_mut() {
            e.compact();
        }
        self.quad.compact();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SymmetricMatrix;

    fn eval_lin(e: &LinExpr, vals: &[f64]) -> f64 {
        e.constant + e.terms.iter().map(|&(v, c)| c * vals[v.0]).sum::<f64>()
    }

    fn eval_quad_expr(q: &QuadExpr, vals: &[f64], x: &[f64]) -> f64 {
        let n = q.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in i..n {
                let v = eval_lin(q.q_entry(i, j), vals);
                s += if i == j { v * x[i] * x[i] } else { 2.0 * v * x[i] * x[j] };
            }
            s += 2.0 * eval_lin(&q.c[i], vals) * x[i];
        }
        s + eval_lin(&q.c0, vals)
    }

    fn eval_cubic_expr(cu: &CubicExpr, vals: &[f64], x: &[f64]) -> f64 {
        let n = cu.n;
        let mut s = 0.0;
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    s += eval_lin(&cu.t[idx], vals) * x[i] * x[j] * x[k];
                    idx += 1;
                }
            }
        }
        s + eval_quad_expr(&cu.quad, vals, x)
    }

    #[test]
    fn var_affine_times_known_quad_matches_direct_product() {
        let n = 3;
        let known = QuadraticFunction {
            q: SymmetricMatrix::from_rows(&[
                vec![1.0, 0.5, -1.0],
                vec![0.5, 2.0, 0.0],
                vec![-1.0, 0.0, -3.0],
            ])
            .unwrap(),
            c: vec![0.7, -0.2, 1.1],
            c0: -2.0,
        };
        // affine with coefficients = variables 0..3, constant var 3
        let f: Vec<LinExpr> = (0..n).map(|i| LinExpr::var(VarId(i))).collect();
        let g = LinExpr::var(VarId(3));
        let mut cu = CubicExpr::zero(n);
        cu.add_var_affine_times_known_quad(&f, &g, &known, 1.0);
        let vals = [0.3, -1.2, 0.8, 0.5];
        for x in [[0.1, 0.2, 0.3], [1.0, -1.0, 2.0], [0.0, 0.5, -0.25]] {
            let aff = vals[0] * x[0] + vals[1] * x[1] + vals[2] * x[2] + vals[3];
            let want = aff * known.eval(&x);
            let got = eval_cubic_expr(&cu, &vals, &x);
            assert!((want - got).abs() < 1e-12 * (1.0 + want.abs()), "{want} vs {got}");
        }
    }

    #[test]
    fn var_quad_times_known_affine_matches_direct_product() {
        let n = 2;
        // variable quadratic: q11=v0, q12=v1, q22=v2, c=(v3, v4), c0=v5
        let mut quad = QuadExpr::zero(n);
        *quad.q_entry_mut(0, 0) = LinExpr::var(VarId(0));
        *quad.q_entry_mut(0, 1) = LinExpr::var(VarId(1));
        *quad.q_entry_mut(1, 1) = LinExpr::var(VarId(2));
        quad.c[0] = LinExpr::var(VarId(3));
        quad.c[1] = LinExpr::var(VarId(4));
        quad.c0 = LinExpr::var(VarId(5));
        let w = [1.5, -0.5];
        let w0 = 0.25;
        let mut cu = CubicExpr::zero(n);
        cu.add_var_quad_times_known_affine(&quad, &w, w0, 1.0);
        let vals = [2.0, -1.0, 0.5, 0.3, -0.7, 1.2];
        for x in [[0.4, 0.9], [-1.0, 0.2], [0.0, 0.0], [2.0, -3.0]] {
            let qv = vals[0] * x[0] * x[0]
                + 2.0 * vals[1] * x[0] * x[1]
                + vals[2] * x[1] * x[1]
                + 2.0 * (vals[3] * x[0] + vals[4] * x[1])
                + vals[5];
            let want = qv * (w[0] * x[0] + w[1] * x[1] + w0);
            let got = eval_cubic_expr(&cu, &vals, &x);
            assert!((want - got).abs() < 1e-12 * (1.0 + want.abs()), "{want} vs {got}");
        }
    }

    #[test]
    fn affine_times_known_affine() {
        let n = 2;
        let f: Vec<LinExpr> = (0..n).map(|i| LinExpr::var(VarId(i))).collect();
        let g = LinExpr::var(VarId(2));
        let mut q = QuadExpr::zero(n);
        q.add_affine_times_known_affine(&f, &g, &[2.0, -1.0], 3.0, 1.0);
        let vals = [0.5, 1.5, -0.25];
        for x in [[0.3, 0.8], [1.0, 1.0], [-0.5, 2.0]] {
            let aff = vals[0] * x[0] + vals[1] * x[1] + vals[2];
            let want = aff * (2.0 * x[0] - x[1] + 3.0);
            let got = eval_quad_expr(&q, &vals, &x);
            assert!((want - got).abs() < 1e-12 * (1.0 + want.abs()), "{want} vs {got}");
        }
    }
}
