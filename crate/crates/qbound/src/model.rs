//! QCQP instance model: coefficient containers, parsing, evaluation, and
//! box normalization.
//!
//! An instance is
//!
//! ```text
//! min  x'Q0x + 2c0'x
//! s.t. x'Qi x + 2ci'x <= bi   i = 1..m
//!      Ax = d
//!      l <= x <= u
//! ```
//!
//! All quadratic data uses the `x'Qx + 2c'x + c0` convention, so the
//! coefficient of the monomial `x_i x_j` (i < j) is `2 Q_ij` and the
//! coefficient of `x_i` is `2 c_i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative asymmetry above which a matrix input is rejected instead of
/// being symmetrized.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix asymmetry {rel:.3e} exceeds {SYMMETRY_TOL:.0e} (relative)")]
    Asymmetric { rel: f64 },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("box violated at index {0}")]
    BoxViolated(usize),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("invalid instance document: {0}")]
    Parse(String),
}

/// Dense symmetric matrix stored as the upper triangle (row-major, i <= j).
///
/// Construction symmetrizes inputs below [`SYMMETRY_TOL`] relative asymmetry
/// and rejects anything above it, so every reader sees an exactly symmetric
/// matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    upper: Vec<f64>,
}

#[inline]
pub(crate) fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    // offset of row i: i*n - i*(i-1)/2
    i * n - i * (i.wrapping_sub(1)) / 2 + (j - i)
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a dense row-major square array, checking symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(ModelError::DimensionMismatch(format!(
                    "matrix row length {} != {}",
                    r.len(),
                    n
                )));
            }
        }
        let mut scale: f64 = 0.0;
        for r in rows {
            for &v in r {
                if !v.is_finite() {
                    return Err(ModelError::NonFinite("matrix"));
                }
                scale = scale.max(v.abs());
            }
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((rows[i][j] - rows[j][i]).abs());
            }
        }
        if scale > 0.0 && worst / scale > SYMMETRY_TOL {
            return Err(ModelError::Asymmetric { rel: worst / scale });
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, rows[i][i]);
            for j in (i + 1)..n {
                m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(m)
    }

    pub fn from_dmatrix(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, 0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper[tri_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper[tri_index(self.n, i, j)] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper[tri_index(self.n, i, j)] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|&v| v == 0.0)
    }

    pub fn norm_fro(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// Quadratic form x'Mx.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.get(i, i) * x[i] * x[i];
            for j in (i + 1)..self.n {
                s += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        s
    }

    /// Matrix-vector product Mx.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let eig = self.to_dense().symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            n: self.n,
            upper: self.upper.iter().map(|v| v * t).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, t: f64) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.upper.iter_mut().zip(other.upper.iter()) {
            *a += t * b;
        }
    }
}

/// Affine function f'x + g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub f: Vec<f64>,
    pub g: f64,
}

impl AffineFunction {
    pub fn zero(n: usize) -> Self {
        Self { f: vec![0.0; n], g: 0.0 }
    }

    pub fn constant(n: usize, g: f64) -> Self {
        Self { f: vec![0.0; n], g }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.f.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.g
    }

    pub fn is_finite(&self) -> bool {
        self.g.is_finite() && self.f.iter().all(|v| v.is_finite())
    }
}

/// Quadratic function x'Qx + 2c'x + c0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFunction {
    pub q: SymmetricMatrix,
    pub c: Vec<f64>,
    pub c0: f64,
}

impl QuadraticFunction {
    pub fn zero(n: usize) -> Self {
        Self {
            q: SymmetricMatrix::zeros(n),
            c: vec![0.0; n],
            c0: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.q.order()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.q.quad_form(x) + 2.0 * self.c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.c0
    }

    /// Gradient 2Qx + 2c.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.mul_vec(x);
        for (gi, ci) in g.iter_mut().zip(&self.c) {
            *gi = 2.0 * *gi + 2.0 * ci;
        }
        g
    }

    /// Matrix representation M(q) = [[Q, c], [c', c0]] of order n+1.
    pub fn matrix_rep(&self) -> SymmetricMatrix {
        let n = self.n();
        let mut m = SymmetricMatrix::zeros(n + 1);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, self.q.get(i, j));
            }
            m.set(i, n, self.c[i]);
        }
        m.set(n, n, self.c0);
        m
    }

    pub fn add_scaled(&mut self, other: &Self, t: f64) {
        self.q.add_scaled(&other.q, t);
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += t * b;
        }
        self.c0 += t * other.c0;
    }

    /// Product with an affine function a(x) = f'x + g; returns the cubic
    /// monomial coefficients plus the degree <= 2 remainder.
    pub fn mul_affine(&self, a: &AffineFunction) -> (CubicTensor, QuadraticFunction) {
        let n = self.n();
        let mut t = CubicTensor::zeros(n);
        // cubic part: f_a x_a * (monomials of x'Qx)
        for i in 0..n {
            for j in i..n {
                let coeff = if i == j { self.q.get(i, i) } else { 2.0 * self.q.get(i, j) };
                if coeff == 0.0 {
                    continue;
                }
                for (av, &fa) in a.f.iter().enumerate() {
                    if fa != 0.0 {
                        t.add_monomial(av, i, j, fa * coeff);
                    }
                }
            }
        }
        // quadratic: g*Q + (f c' + c f') from (f'x)(2c'x), linear: g c + (c0/2) f,
        // const: g c0
        let mut rem = QuadraticFunction::zero(n);
        rem.q = self.q.scaled(a.g);
        for i in 0..n {
            rem.q.add(i, i, 2.0 * a.f[i] * self.c[i]);
            for j in (i + 1)..n {
                rem.q.add(i, j, a.f[i] * self.c[j] + a.f[j] * self.c[i]);
            }
        }
        for i in 0..n {
            rem.c[i] = a.g * self.c[i] + 0.5 * self.c0 * a.f[i];
        }
        rem.c0 = a.g * self.c0;
        (t, rem)
    }
}

/// Dense order-3 coefficient container indexed by multisets {i <= j <= k}.
///
/// The stored entry is the coefficient of the monomial `x_i x_j x_k` itself;
/// evaluation is `sum_{i<=j<=k} t_ijk x_i x_j x_k` with no hidden
/// multiplicity factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicTensor {
    n: usize,
    entries: Vec<f64>,
}

/// Number of monomials x_i x_j x_k with i <= j <= k < n.
pub fn cubic_monomial_count(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

/// Lexicographic position of the multiset (i <= j <= k) among all cubic
/// monomials in n variables.
pub fn cubic_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i <= j && j <= k && k < n);
    // count multisets starting with i' < i, then pairs (j', k') in the
    // (n - i)-variable tail
    let tail = |m: usize| m * (m + 1) * (m + 2) / 6;
    let full = tail(n);
    let after_i = full - tail(n - i);
    let ji = j - i;
    let ni = n - i;
    let pair_offset = ji * ni - ji * (ji.wrapping_sub(1)) / 2 + (k - j);
    after_i + pair_offset
}

impl CubicTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; cubic_monomial_count(n)],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (i, j, k) = sort3(i, j, k);
        self.entries[cubic_index(self.n, i, j, k)]
    }

    /// Adds `v` to the coefficient of the monomial containing indices
    /// {i, j, k} in any order.
    #[inline]
    pub fn add_monomial(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let (i, j, k) = sort3(i, j, k);
        self.entries[cubic_index(self.n, i, j, k)] += v;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        let mut idx = 0;
        for i in 0..self.n {
            for j in i..self.n {
                for k in j..self.n {
                    let t = self.entries[idx];
                    if t != 0.0 {
                        s += t * x[i] * x[j] * x[k];
                    }
                    idx += 1;
                }
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn add_scaled(&mut self, other: &Self, t: f64) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += t * b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut r = self.clone();
        r.add_scaled(other, -1.0);
        r
    }
}

#[inline]
fn sort3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let (b, c) = if b <= c { (b, c) } else { (c, b) };
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    (a, b, c)
}

/// Cubic function t(x) + x'Qx + 2c'x + c0 (houses the kappa multiplier).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicFunction {
    pub t: CubicTensor,
    pub quad: QuadraticFunction,
}

impl CubicFunction {
    pub fn zero(n: usize) -> Self {
        Self {
            t: CubicTensor::zeros(n),
            quad: QuadraticFunction::zero(n),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.t.eval(x) + self.quad.eval(x)
    }

    /// All stored coefficients in monomial convention: cubic entries,
    /// quadratic matrix entries, linear c entries, constant term.
    pub fn coefficients(&self) -> Vec<f64> {
        let n = self.t.order();
        let mut out = self.t.entries().to_vec();
        for i in 0..n {
            for j in i..n {
                out.push(self.quad.q.get(i, j));
            }
        }
        out.extend_from_slice(&self.quad.c);
        out.push(self.quad.c0);
        out
    }
}

/// The QCQP instance. Index 0 of `q`/`c` is the objective.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: usize,
    pub q: Vec<SymmetricMatrix>,
    pub c: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub a: DMatrix<f64>,
    pub d: DVector<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

/// Result of a full point evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub objective: f64,
    /// g_i(x) = x'Qi x + 2ci'x - bi (feasible iff <= 0)
    pub constraint_values: Vec<f64>,
    pub equality_residuals: Vec<f64>,
    pub box_violation: f64,
}

impl Evaluation {
    pub fn max_violation(&self) -> f64 {
        let quad = self
            .constraint_values
            .iter()
            .fold(0.0f64, |a, &v| a.max(v));
        let eq = self
            .equality_residuals
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        quad.max(eq).max(self.box_violation)
    }
}

impl Instance {
    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn p(&self) -> usize {
        self.d.len()
    }

    pub fn objective_fn(&self) -> QuadraticFunction {
        QuadraticFunction {
            q: self.q[0].clone(),
            c: self.c[0].clone(),
            c0: 0.0,
        }
    }

    /// Constraint i (1-based over quadratic constraints) as g_i(x) <= 0.
    pub fn constraint_fn(&self, i: usize) -> QuadraticFunction {
        QuadraticFunction {
            q: self.q[i + 1].clone(),
            c: self.c[i + 1].clone(),
            c0: -self.b[i],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n;
        if self.q.len() != self.m() + 1 || self.c.len() != self.m() + 1 {
            return Err(ModelError::DimensionMismatch(
                "objective/constraint list lengths".into(),
            ));
        }
        for q in &self.q {
            if q.order() != n {
                return Err(ModelError::DimensionMismatch("matrix order".into()));
            }
            if q.upper.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite("quadratic matrix"));
            }
        }
        for c in &self.c {
            if c.len() != n {
                return Err(ModelError::DimensionMismatch("linear term length".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite("linear term"));
            }
        }
        if !self.b.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NonFinite("rhs b"));
        }
        if self.a.nrows() != self.p() || (self.p() > 0 && self.a.ncols() != n) {
            return Err(ModelError::DimensionMismatch("equality system".into()));
        }
        if self.a.iter().any(|v| !v.is_finite()) || self.d.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("equality system"));
        }
        if self.l.len() != n || self.u.len() != n {
            return Err(ModelError::DimensionMismatch("box length".into()));
        }
        for i in 0..n {
            if !self.l[i].is_finite() || !self.u[i].is_finite() || self.l[i] > self.u[i] {
                return Err(ModelError::BoxViolated(i + 1));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Evaluation {
        assert_eq!(x.len(), self.n);
        let objective = self.q[0].quad_form(x)
            + 2.0 * self.c[0].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let constraint_values = (0..self.m())
            .map(|i| {
                self.q[i + 1].quad_form(x)
                    + 2.0 * self.c[i + 1].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    - self.b[i]
            })
            .collect();
        let xv = DVector::from_column_slice(x);
        let equality_residuals = if self.p() > 0 {
            (&self.a * &xv - &self.d).iter().cloned().collect()
        } else {
            Vec::new()
        };
        let box_violation = (0..self.n).fold(0.0f64, |a, i| {
            a.max(self.l[i] - x[i]).max(x[i] - self.u[i])
        });
        Evaluation {
            objective,
            constraint_values,
            equality_residuals,
            box_violation,
        }
    }

    /// True when the box is already exactly [0,1]^n.
    pub fn is_unit_box(&self) -> bool {
        self.l.iter().all(|&v| v == 0.0) && self.u.iter().all(|&v| v == 1.0)
    }
}

/// Affine change of variables x = offset + diag(scale) y restricted to the
/// kept coordinates; coordinates with zero scale were fixed and eliminated.
#[derive(Debug, Clone, Serialize)]
pub struct AffineMap {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    pub kept: Vec<usize>,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        Self {
            offset: vec![0.0; n],
            scale: vec![1.0; n],
            kept: (0..n).collect(),
        }
    }

    /// Maps a point of the normalized instance back to original coordinates.
    pub fn to_original(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.kept.len());
        let mut x = self.offset.clone();
        for (slot, &orig) in self.kept.iter().enumerate() {
            x[orig] += self.scale[orig] * y[slot];
        }
        x
    }

    /// Maps an original-coordinate point into the normalized instance.
    pub fn to_normalized(&self, x: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .map(|&i| (x[i] - self.offset[i]) / self.scale[i])
            .collect()
    }
}

/// Rewrites an instance over the unit box via x = l + diag(u - l) y.
/// Coordinates with u_i = l_i are substituted out entirely.
pub fn normalize_box(inst: &Instance) -> (Instance, AffineMap) {
    if inst.is_unit_box() {
        return (inst.clone(), AffineMap::identity(inst.n));
    }
    let n = inst.n;
    let kept: Vec<usize> = (0..n).filter(|&i| inst.u[i] > inst.l[i]).collect();
    let nk = kept.len();
    let offset = inst.l.clone();
    let mut scale = vec![0.0; n];
    for &i in &kept {
        scale[i] = inst.u[i] - inst.l[i];
    }

    let transform_quad = |q: &SymmetricMatrix, c: &[f64]| -> (SymmetricMatrix, Vec<f64>, f64) {
        // x = off + S y:  y'(SQS)y + 2(S(Q off + c))'y + (off'Q off + 2c'off)
        let mut qn = SymmetricMatrix::zeros(nk);
        for (ai, &i) in kept.iter().enumerate() {
            for (aj, &j) in kept.iter().enumerate().skip(ai) {
                qn.set(ai, aj, scale[i] * scale[j] * q.get(i, j));
            }
        }
        let qoff = q.mul_vec(&offset);
        let cn: Vec<f64> = kept
            .iter()
            .map(|&i| scale[i] * (qoff[i] + c[i]))
            .collect();
        let shift = q.quad_form(&offset) + 2.0 * c.iter().zip(&offset).map(|(a, b)| a * b).sum::<f64>();
        (qn, cn, shift)
    };

    let mut q_new = Vec::with_capacity(inst.q.len());
    let mut c_new = Vec::with_capacity(inst.c.len());
    let mut b_new = Vec::with_capacity(inst.b.len());
    let mut obj_shift = 0.0;
    for (idx, (q, c)) in inst.q.iter().zip(&inst.c).enumerate() {
        let (qn, cn, shift) = transform_quad(q, c);
        q_new.push(qn);
        c_new.push(cn);
        if idx == 0 {
            obj_shift = shift;
        } else {
            b_new.push(inst.b[idx - 1] - shift);
        }
    }
    let _ = obj_shift; // objective shift is reported through bound offsets by callers

    let p = inst.p();
    let a_new = DMatrix::from_fn(p, nk, |r, s| inst.a[(r, kept[s])] * scale[kept[s]]);
    let d_new = if p > 0 {
        &inst.d - &inst.a * DVector::from_column_slice(&offset)
    } else {
        DVector::zeros(0)
    };

    let out = Instance {
        n: nk,
        q: q_new,
        c: c_new,
        b: b_new,
        a: a_new,
        d: d_new,
        l: vec![0.0; nk],
        u: vec![1.0; nk],
    };
    (
        out,
        AffineMap {
            offset,
            scale,
            kept,
        },
    )
}

/// Constant added to the normalized objective so that values agree with the
/// original instance: obj_orig(x) = obj_norm(y) + offset_shift.
pub fn normalize_objective_shift(inst: &Instance) -> f64 {
    if inst.is_unit_box() {
        return 0.0;
    }
    let off = &inst.l;
    inst.q[0].quad_form(off) + 2.0 * inst.c[0].iter().zip(off).map(|(a, b)| a * b).sum::<f64>()
}

/// PSD factorization Q = R'R by symmetric eigendecomposition.
///
/// Eigenvalues in [-tol, 0) are clipped to zero; anything below -tol is
/// rejected as [`ModelError::NotPsd`]. `r` has one row per positive
/// eigenvalue (the numerical rank).
pub fn factorize_psd(q: &SymmetricMatrix, tol: Option<f64>) -> Result<DMatrix<f64>, ModelError> {
    let n = q.order();
    let tol = tol.unwrap_or(1e-9 * q.norm_fro()).max(1e-300);
    let eig = q.to_dense().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(ModelError::NotPsd(min));
    }
    let mut rows: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (v, i))
        .collect();
    // fixed ordering for determinism
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let r = rows.len();
    let mut out = DMatrix::zeros(r, n);
    for (row, &(lam, col)) in rows.iter().enumerate() {
        let s = lam.sqrt();
        for j in 0..n {
            out[(row, j)] = s * eig.eigenvectors[(j, col)];
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// instance document (JSON schema)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct QuadDoc {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    c: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstraintDoc {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    c: Vec<f64>,
    b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EqualityDoc {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    d: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoxDoc {
    l: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    n: usize,
    objective: QuadDoc,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
    #[serde(default)]
    equalities: Option<EqualityDoc>,
    #[serde(rename = "box", default)]
    box_: Option<BoxDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

/// Parses and validates an instance document (see the JSON schema in the
/// README). The box defaults to [0,1]^n and equalities to none.
pub fn parse_instance(text: &str) -> Result<Instance, ModelError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    let n = doc.n;
    let check_vec = |v: &[f64], what: &str| -> Result<(), ModelError> {
        if v.len() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "{what} has length {} != n = {n}",
                v.len()
            )));
        }
        Ok(())
    };

    let mut q = Vec::new();
    let mut c = Vec::new();
    let mut b = Vec::new();
    if doc.objective.q.len() != n {
        return Err(ModelError::DimensionMismatch(format!(
            "objective Q is {}x? but n = {n}",
            doc.objective.q.len()
        )));
    }
    q.push(SymmetricMatrix::from_rows(&doc.objective.q)?);
    check_vec(&doc.objective.c, "objective c")?;
    c.push(doc.objective.c.clone());
    for (k, con) in doc.constraints.iter().enumerate() {
        if con.q.len() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "constraint {} Q order {} != n = {n}",
                k + 1,
                con.q.len()
            )));
        }
        q.push(SymmetricMatrix::from_rows(&con.q)?);
        check_vec(&con.c, "constraint c")?;
        c.push(con.c.clone());
        if !con.b.is_finite() {
            return Err(ModelError::NonFinite("constraint rhs"));
        }
        b.push(con.b);
    }

    let (a, d) = match &doc.equalities {
        Some(eq) => {
            let p = eq.a.len();
            if eq.d.len() != p {
                return Err(ModelError::DimensionMismatch(format!(
                    "equalities: A has {p} rows but d has {}",
                    eq.d.len()
                )));
            }
            for row in &eq.a {
                check_vec(row, "equality row")?;
            }
            let a = DMatrix::from_fn(p, n, |i, j| eq.a[i][j]);
            (a, DVector::from_vec(eq.d.clone()))
        }
        None => (DMatrix::zeros(0, n), DVector::zeros(0)),
    };

    let (l, u) = match &doc.box_ {
        Some(bx) => {
            check_vec(&bx.l, "box l")?;
            check_vec(&bx.u, "box u")?;
            (bx.l.clone(), bx.u.clone())
        }
        None => (vec![0.0; n], vec![1.0; n]),
    };

    let inst = Instance {
        n,
        q,
        c,
        b,
        a,
        d,
        l,
        u,
    };
    inst.validate()?;
    Ok(inst)
}

/// Serializes an instance back to the document schema.
pub fn instance_to_json(inst: &Instance, metadata: Option<serde_json::Value>) -> String {
    let to_rows = |q: &SymmetricMatrix| -> Vec<Vec<f64>> {
        (0..inst.n)
            .map(|i| (0..inst.n).map(|j| q.get(i, j)).collect())
            .collect()
    };
    let doc = InstanceDoc {
        n: inst.n,
        objective: QuadDoc {
            q: to_rows(&inst.q[0]),
            c: inst.c[0].clone(),
        },
        constraints: (0..inst.m())
            .map(|i| ConstraintDoc {
                q: to_rows(&inst.q[i + 1]),
                c: inst.c[i + 1].clone(),
                b: inst.b[i],
            })
            .collect(),
        equalities: if inst.p() > 0 {
            Some(EqualityDoc {
                a: (0..inst.p())
                    .map(|i| (0..inst.n).map(|j| inst.a[(i, j)]).collect())
                    .collect(),
                d: inst.d.iter().cloned().collect(),
            })
        } else {
            None
        },
        box_: Some(BoxDoc {
            l: inst.l.clone(),
            u: inst.u.clone(),
        }),
        metadata,
    };
    serde_json::to_string_pretty(&doc).expect("instance serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_instance() -> Instance {
        parse_instance(
            r#"{
            "n": 2,
            "objective": {"Q": [[1.0, 0.5], [0.5, -2.0]], "c": [0.3, -1.0]},
            "constraints": [{"Q": [[1.0, 0.0], [0.0, 1.0]], "c": [0.0, 0.0], "b": 1.0}],
            "equalities": {"A": [[1.0, 1.0]], "d": [1.0]},
            "box": {"l": [-2.0, -2.0], "u": [3.0, 3.0]}
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn parse_defaults_box_and_equalities() {
        let inst = parse_instance(
            r#"{"n": 2, "objective": {"Q": [[1,0],[0,1]], "c": [0,0]}}"#,
        )
        .unwrap();
        assert_eq!(inst.m(), 0);
        assert_eq!(inst.p(), 0);
        assert_eq!(inst.l, vec![0.0, 0.0]);
        assert_eq!(inst.u, vec![1.0, 1.0]);
    }

    #[test]
    fn parse_rejects_inverted_box() {
        let err = parse_instance(
            r#"{"n": 2, "objective": {"Q": [[1,0],[0,1]], "c": [0,0]},
                "box": {"l": [0,0], "u": [1,-1]}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("box violated at index 2"), "{err}");
    }

    #[test]
    fn parse_rejects_asymmetry() {
        let err = parse_instance(
            r#"{"n": 2, "objective": {"Q": [[1, 0.1], [0.2, 1]], "c": [0,0]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Asymmetric { .. }));
    }

    #[test]
    fn evaluate_matches_naive_double_loop() {
        let inst = sample_instance();
        let x = [0.7, 0.3];
        let ev = inst.evaluate(&x);
        // naive evaluation with explicit loops
        let mut obj = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                obj += x[i] * inst.q[0].get(i, j) * x[j];
            }
            obj += 2.0 * inst.c[0][i] * x[i];
        }
        assert!((ev.objective - obj).abs() < 1e-14);
        assert_eq!(ev.constraint_values.len(), 1);
        assert!((ev.constraint_values[0] - (0.49 + 0.09 - 1.0)).abs() < 1e-14);
        assert!((ev.equality_residuals[0] - 0.0).abs() < 1e-14);
    }

    #[test]
    fn normalize_1d_square() {
        // min x^2 on [-1,1] becomes 4y^2 - 4y + 1 on [0,1]
        let inst = parse_instance(
            r#"{"n": 1, "objective": {"Q": [[1]], "c": [0]}, "box": {"l": [-1], "u": [1]}}"#,
        )
        .unwrap();
        let (norm, map) = normalize_box(&inst);
        assert_eq!(norm.q[0].get(0, 0), 4.0);
        assert_eq!(norm.c[0][0], -2.0); // 2c'y = -4y
        let shift = normalize_objective_shift(&inst);
        assert_eq!(shift, 1.0);
        for &y in &[0.0, 0.25, 0.9] {
            let x = map.to_original(&[y]);
            let orig = inst.evaluate(&x).objective;
            let normed = norm.evaluate(&[y]).objective + shift;
            assert!((orig - normed).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_identity_when_unit_box() {
        let inst = parse_instance(
            r#"{"n": 2, "objective": {"Q": [[1,0],[0,1]], "c": [0,0]}}"#,
        )
        .unwrap();
        let (norm, map) = normalize_box(&inst);
        assert_eq!(norm.q[0], inst.q[0]);
        assert_eq!(map.kept, vec![0, 1]);
        assert_eq!(map.scale, vec![1.0, 1.0]);
    }

    #[test]
    fn normalize_eliminates_fixed_vars() {
        let inst = parse_instance(
            r#"{"n": 2, "objective": {"Q": [[1,1],[1,1]], "c": [0,0]},
                "box": {"l": [0.5, 0.0], "u": [0.5, 2.0]}}"#,
        )
        .unwrap();
        let (norm, map) = normalize_box(&inst);
        assert_eq!(norm.n, 1);
        assert_eq!(map.kept, vec![1]);
        let x = map.to_original(&[0.25]);
        assert_eq!(x[0], 0.5);
        assert!((x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn factorize_psd_identity_and_rank_one() {
        let r = factorize_psd(&SymmetricMatrix::identity(3), None).unwrap();
        let rr = r.transpose() * &r;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((rr[(i, j)] - want).abs() < 1e-12);
            }
        }
        let mut ee = SymmetricMatrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                ee.set(i, j, 1.0);
            }
        }
        let r = factorize_psd(&ee, None).unwrap();
        assert_eq!(r.nrows(), 1);
        assert!((r[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((r[(0, 0)] - r[(0, 1)]).abs() < 1e-12);
    }

    #[test]
    fn factorize_psd_rejects_indefinite() {
        let mut q = SymmetricMatrix::identity(2);
        q.set(1, 1, -1.0);
        assert!(matches!(
            factorize_psd(&q, None),
            Err(ModelError::NotPsd(_))
        ));
    }

    #[test]
    fn cubic_index_roundtrip() {
        let n = 5;
        let mut pos = 0;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    assert_eq!(cubic_index(n, i, j, k), pos);
                    pos += 1;
                }
            }
        }
        assert_eq!(pos, cubic_monomial_count(n));
    }

    #[test]
    fn mul_affine_hand_expansion() {
        // lambda(x) = x1 against x'x - 1 in n = 2: cubic {x1^3: 1, x1 x2^2: 1},
        // remainder -x1
        let q = QuadraticFunction {
            q: SymmetricMatrix::identity(2),
            c: vec![0.0, 0.0],
            c0: -1.0,
        };
        let a = AffineFunction {
            f: vec![1.0, 0.0],
            g: 0.0,
        };
        let (t, rem) = q.mul_affine(&a);
        assert_eq!(t.get(0, 0, 0), 1.0);
        assert_eq!(t.get(0, 1, 1), 1.0);
        assert_eq!(t.get(0, 0, 1), 0.0);
        assert!((rem.eval(&[0.3, 0.9]) - -0.3).abs() < 1e-15);
    }

    #[test]
    fn mul_affine_pointwise_oracle() {
        // compare against direct product evaluation at random-ish points
        let q = QuadraticFunction {
            q: SymmetricMatrix::from_rows(&[
                vec![1.3, -0.2, 0.7],
                vec![-0.2, 0.0, 1.1],
                vec![0.7, 1.1, -2.0],
            ])
            .unwrap(),
            c: vec![0.5, -1.0, 0.25],
            c0: 0.75,
        };
        let a = AffineFunction {
            f: vec![-0.4, 0.9, 2.0],
            g: -1.5,
        };
        let (t, rem) = q.mul_affine(&a);
        let pts = [
            [0.1, 0.2, 0.3],
            [1.0, -1.0, 0.5],
            [-0.7, 0.33, 2.1],
            [0.0, 0.0, 0.0],
        ];
        for x in pts {
            let direct = a.eval(&x) * q.eval(&x);
            let expanded = t.eval(&x) + rem.eval(&x);
            assert!(
                (direct - expanded).abs() <= 1e-10 * (1.0 + direct.abs()),
                "{direct} vs {expanded}"
            );
        }
    }
}
