//! Homogeneous self-dual interior-point method for the standard form
//! `min c'x s.t. Ax = b, x in K` with K a product of free, nonnegative, and
//! PSD blocks.
//!
//! The embedding tracks (x, y, s, tau, kappa) with Nesterov-Todd scaled
//! directions for the symmetric cones and a Mehrotra predictor-corrector
//! step. The reduced KKT system is solved by eliminating the scaled conic
//! block, leaving a quasi-definite saddle system in the equality duals and
//! the free variables; that system is factored by a regularized dense LDL'
//! with iterative refinement.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::program::{BlockKind, ConicProgram};
use super::svec::{smat, svec, svec_dim};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    Numerical,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    /// Primal point (already divided by tau), in original column order.
    pub x: Vec<f64>,
    /// Equality-row duals, zeros filled in for presolved-out rows.
    pub y: Vec<f64>,
    /// Dual slack, zero on free coordinates.
    pub s: Vec<f64>,
    pub obj: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Assert the NT property (equal scaled primal/dual spectra) each
    /// iteration.
    pub debug_checks: bool,
    /// Print one line per iteration.
    pub trace: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            max_iter: 200,
            debug_checks: false,
            trace: false,
        }
    }
}

// ---------------------------------------------------------------------------
// cone layout over the conic (non-free) coordinates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum Seg {
    NonNeg { offset: usize, dim: usize },
    Psd { offset: usize, order: usize },
}

#[derive(Debug, Clone)]
struct Cone {
    segs: Vec<Seg>,
    dim: usize,
    degree: usize,
}

impl Cone {
    fn from_blocks(blocks: &[BlockKind]) -> Self {
        let mut segs = Vec::new();
        let mut dim = 0;
        let mut degree = 0;
        for b in blocks {
            match *b {
                BlockKind::Free { .. } => {}
                BlockKind::NonNeg { dim: d } => {
                    if d > 0 {
                        segs.push(Seg::NonNeg { offset: dim, dim: d });
                        dim += d;
                        degree += d;
                    }
                }
                BlockKind::Psd { order } => {
                    if order > 0 {
                        segs.push(Seg::Psd { offset: dim, order });
                        dim += svec_dim(order);
                        degree += order;
                    }
                }
            }
        }
        Self { segs, dim, degree }
    }

    fn identity(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for seg in &self.segs {
            match *seg {
                Seg::NonNeg { offset, dim } => v[offset..offset + dim].fill(1.0),
                Seg::Psd { offset, order } => {
                    let mut idx = offset;
                    for i in 0..order {
                        v[idx] = 1.0;
                        idx += order - i;
                    }
                }
            }
        }
        v
    }
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling
// ---------------------------------------------------------------------------

enum SegScaling {
    NonNeg {
        w: Vec<f64>,
        lambda: Vec<f64>,
    },
    Psd {
        t: DMatrix<f64>,
        tinv: DMatrix<f64>,
        /// T T' (the "W^2" congruence matrix)
        wm: DMatrix<f64>,
        /// (T T')^{-1} = Tinv' Tinv
        gm: DMatrix<f64>,
        lambda: DVector<f64>,
    },
}

struct Scaling {
    segs: Vec<SegScaling>,
}

fn chol_or_eig_floor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.l());
    }
    // Iterate drifted out of the cone by rounding; floor the spectrum.
    let eig = m.clone().symmetric_eigen();
    let maxev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if !maxev.is_finite() {
        return None;
    }
    let floor = (maxev * 1e-14).max(1e-300);
    let mut fixed = DMatrix::zeros(m.nrows(), m.ncols());
    for k in 0..eig.eigenvalues.len() {
        let lam = eig.eigenvalues[k].max(floor);
        let col = eig.eigenvectors.column(k);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                fixed[(i, j)] += lam * col[i] * col[j];
            }
        }
    }
    fixed.cholesky().map(|c| c.l())
}

fn compute_scaling(cone: &Cone, v: &[f64], s: &[f64], debug_checks: bool) -> Option<Scaling> {
    let mut segs = Vec::with_capacity(cone.segs.len());
    for seg in &cone.segs {
        match *seg {
            Seg::NonNeg { offset, dim } => {
                let mut w = vec![0.0; dim];
                let mut lam = vec![0.0; dim];
                for i in 0..dim {
                    let (vi, si) = (v[offset + i], s[offset + i]);
                    if vi <= 0.0 || si <= 0.0 {
                        return None;
                    }
                    w[i] = (vi / si).sqrt();
                    lam[i] = (vi * si).sqrt();
                }
                segs.push(SegScaling::NonNeg { w, lambda: lam });
            }
            Seg::Psd { offset, order } => {
                let d = svec_dim(order);
                let vm = smat(&v[offset..offset + d], order);
                let sm = smat(&s[offset..offset + d], order);
                let lv = chol_or_eig_floor(&vm)?;
                let ls = chol_or_eig_floor(&sm)?;
                // SVD of Ls' Lv = U Sigma Vt; T = Lv V Sigma^{-1/2}
                let prod = ls.transpose() * &lv;
                let svd = prod.svd(true, true);
                let u = svd.u.as_ref()?;
                let vt = svd.v_t.as_ref()?;
                let sig = &svd.singular_values;
                if sig.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
                    return None;
                }
                let mut t = &lv * vt.transpose();
                let mut tinv_left = u.transpose() * ls.transpose();
                for j in 0..order {
                    let sc = sig[j].sqrt();
                    for i in 0..order {
                        t[(i, j)] /= sc;
                    }
                    for k in 0..order {
                        tinv_left[(j, k)] /= sc;
                    }
                }
                // tinv = Sigma^{-1/2} U' Ls'  satisfies tinv * t = I
                let tinv = tinv_left;
                let wm = &t * t.transpose();
                let gm = tinv.transpose() * &tinv;
                let lam = DVector::from_iterator(order, sig.iter().cloned());
                if debug_checks {
                    let sv = tinv.clone() * &vm * tinv.transpose();
                    let ss = t.transpose() * &sm * &t;
                    let scale = 1.0 + lam.amax();
                    for i in 0..order {
                        for j in 0..order {
                            let want = if i == j { lam[i] } else { 0.0 };
                            assert!(
                                (sv[(i, j)] - want).abs() <= 1e-8 * scale,
                                "NT scaled primal iterate differs from spectrum"
                            );
                            assert!(
                                (ss[(i, j)] - want).abs() <= 1e-8 * scale,
                                "NT scaled dual iterate differs from spectrum"
                            );
                        }
                    }
                }
                segs.push(SegScaling::Psd {
                    t,
                    tinv,
                    wm,
                    gm,
                    lambda: lam,
                });
            }
        }
    }
    Some(Scaling { segs })
}

impl Scaling {
    /// H(z): congruence by W^2 per block (inverse of the dual-row weight).
    fn apply_h(&self, cone: &Cone, z: &[f64], out: &mut [f64]) {
        for (seg, sc) in cone.segs.iter().zip(&self.segs) {
            match (*seg, sc) {
                (Seg::NonNeg { offset, dim }, SegScaling::NonNeg { w, .. }) => {
                    for i in 0..dim {
                        out[offset + i] = z[offset + i] * w[i] * w[i];
                    }
                }
                (Seg::Psd { offset, order }, SegScaling::Psd { wm, .. }) => {
                    let d = svec_dim(order);
                    let zm = smat(&z[offset..offset + d], order);
                    let res = wm * zm * wm;
                    out[offset..offset + d].copy_from_slice(&svec(&res));
                }
                _ => unreachable!(),
            }
        }
    }

    /// Hinv(z): congruence by (T T')^{-1} per block.
    fn apply_hinv(&self, cone: &Cone, z: &[f64], out: &mut [f64]) {
        for (seg, sc) in cone.segs.iter().zip(&self.segs) {
            match (*seg, sc) {
                (Seg::NonNeg { offset, dim }, SegScaling::NonNeg { w, .. }) => {
                    for i in 0..dim {
                        out[offset + i] = z[offset + i] / (w[i] * w[i]);
                    }
                }
                (Seg::Psd { offset, order }, SegScaling::Psd { gm, .. }) => {
                    let d = svec_dim(order);
                    let zm = smat(&z[offset..offset + d], order);
                    let res = gm * zm * gm;
                    out[offset..offset + d].copy_from_slice(&svec(&res));
                }
                _ => unreachable!(),
            }
        }
    }

    /// Scaled primal direction: Tinv V Tinv' (v / w on nonneg).
    fn scale_v(&self, cone: &Cone, v: &[f64], out: &mut [f64]) {
        for (seg, sc) in cone.segs.iter().zip(&self.segs) {
            match (*seg, sc) {
                (Seg::NonNeg { offset, dim }, SegScaling::NonNeg { w, .. }) => {
                    for i in 0..dim {
                        out[offset + i] = v[offset + i] / w[i];
                    }
                }
                (Seg::Psd { offset, order }, SegScaling::Psd { tinv, .. }) => {
                    let d = svec_dim(order);
                    let vm = smat(&v[offset..offset + d], order);
                    let res = tinv * vm * tinv.transpose();
                    out[offset..offset + d].copy_from_slice(&svec(&res));
                }
                _ => unreachable!(),
            }
        }
    }

    /// Scaled dual direction: T' S T (s * w on nonneg).
    fn scale_s(&self, cone: &Cone, s: &[f64], out: &mut [f64]) {
        for (seg, sc) in cone.segs.iter().zip(&self.segs) {
            match (*seg, sc) {
                (Seg::NonNeg { offset, dim }, SegScaling::NonNeg { w, .. }) => {
                    for i in 0..dim {
                        out[offset + i] = s[offset + i] * w[i];
                    }
                }
                (Seg::Psd { offset, order }, SegScaling::Psd { t, .. }) => {
                    let d = svec_dim(order);
                    let sm = smat(&s[offset..offset + d], order);
                    let res = t.transpose() * sm * t;
                    out[offset..offset + d].copy_from_slice(&svec(&res));
                }
                _ => unreachable!(),
            }
        }
    }

    /// Given d in scaled space, computes T^{-T} (lambda o\ d) T^{-1}
    /// (the dual-side unscaling of the Jordan solve).
    fn dual_from_complementarity(&self, cone: &Cone, d: &[f64], out: &mut [f64]) {
        for (seg, sc) in cone.segs.iter().zip(&self.segs) {
            match (*seg, sc) {
                (Seg::NonNeg { offset, dim }, SegScaling::NonNeg { w, lambda }) => {
                    for i in 0..dim {
                        out[offset + i] = d[offset + i] / (lambda[i] * w[i]);
                    }
                }
                (Seg::Psd { offset, order }, SegScaling::Psd { tinv, lambda, .. }) => {
                    let dd = svec_dim(order);
                    let mut dm = smat(&d[offset..offset + dd], order);
                    for i in 0..order {
                        for j in 0..order {
                            dm[(i, j)] *= 2.0 / (lambda[i] + lambda[j]);
                        }
                    }
                    let res = tinv.transpose() * dm * tinv;
                    out[offset..offset + dd].copy_from_slice(&svec(&res));
                }
                _ => unreachable!(),
            }
        }
    }

    /// Jordan product of two scaled-space vectors.
    fn jordan_product(&self, cone: &Cone, a: &[f64], b: &[f64], out: &mut [f64]) {
        for (seg, _) in cone.segs.iter().zip(&self.segs) {
            match *seg {
                Seg::NonNeg { offset, dim } => {
                    for i in 0..dim {
                        out[offset + i] = a[offset + i] * b[offset + i];
                    }
                }
                Seg::Psd { offset, order } => {
                    let d = svec_dim(order);
                    let am = smat(&a[offset..offset + d], order);
                    let bm = smat(&b[offset..offset + d], order);
                    let res = 0.5 * (&am * &bm + &bm * &am);
                    out[offset..offset + d].copy_from_slice(&svec(&res));
                }
            }
        }
    }

    /// lambda o lambda (squared scaled point).
    fn lambda_square(&self, cone: &Cone, out: &mut [f64]) {
        for (seg, sc) in cone.segs.iter().zip(&self.segs) {
            match (*seg, sc) {
                (Seg::NonNeg { offset, dim }, SegScaling::NonNeg { lambda, .. }) => {
                    for i in 0..dim {
                        out[offset + i] = lambda[i] * lambda[i];
                    }
                }
                (Seg::Psd { offset, order }, SegScaling::Psd { lambda, .. }) => {
                    let d = svec_dim(order);
                    out[offset..offset + d].fill(0.0);
                    let mut idx = offset;
                    for i in 0..order {
                        out[idx] = lambda[i] * lambda[i];
                        idx += order - i;
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    /// Largest step length alpha with Lambda + alpha * dir_scaled staying in
    /// the cone. `dir_scaled` lives in scaled space.
    fn max_step(&self, cone: &Cone, dir_scaled: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for (seg, sc) in cone.segs.iter().zip(&self.segs) {
            match (*seg, sc) {
                (Seg::NonNeg { offset, dim }, SegScaling::NonNeg { lambda, .. }) => {
                    for i in 0..dim {
                        let d = dir_scaled[offset + i];
                        if d < 0.0 {
                            alpha = alpha.min(-lambda[i] / d);
                        }
                    }
                }
                (Seg::Psd { offset, order }, SegScaling::Psd { lambda, .. }) => {
                    let dd = svec_dim(order);
                    let mut m = smat(&dir_scaled[offset..offset + dd], order);
                    for i in 0..order {
                        for j in 0..order {
                            m[(i, j)] /= (lambda[i] * lambda[j]).sqrt();
                        }
                    }
                    let eig = m.symmetric_eigen();
                    let emin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                    if emin < 0.0 {
                        alpha = alpha.min(-1.0 / emin);
                    }
                }
                _ => unreachable!(),
            }
        }
        alpha
    }
}

// ---------------------------------------------------------------------------
// dense LDL' for the quasi-definite reduced KKT
// ---------------------------------------------------------------------------

struct Ldl {
    f: DMatrix<f64>,
    n: usize,
}

impl Ldl {
    /// In-place right-looking LDL' without pivoting (valid for
    /// quasi-definite input).
    fn factor(mut a: DMatrix<f64>) -> Option<Ldl> {
        let n = a.nrows();
        for k in 0..n {
            let d = a[(k, k)];
            if d == 0.0 || !d.is_finite() {
                return None;
            }
            for j in (k + 1)..n {
                let ljk = a[(j, k)] / d;
                if ljk != 0.0 {
                    for i in j..n {
                        let akik = a[(i, k)];
                        a[(i, j)] -= ljk * akik;
                    }
                }
            }
            for j in (k + 1)..n {
                a[(j, k)] /= d;
            }
        }
        Some(Ldl { f: a, n })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        // L z = x (unit lower)
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for i in (j + 1)..n {
                    x[i] -= self.f[(i, j)] * xj;
                }
            }
        }
        // D w = z
        for (j, v) in x.iter_mut().enumerate().take(n) {
            *v /= self.f[(j, j)];
        }
        // L' out = w
        for j in (0..n).rev() {
            let mut s = x[j];
            for i in (j + 1)..n {
                s -= self.f[(i, j)] * x[i];
            }
            x[j] = s;
        }
    }
}

// ---------------------------------------------------------------------------
// presolve
// ---------------------------------------------------------------------------

struct Presolved {
    au: DMatrix<f64>,
    av: DMatrix<f64>,
    cu: DVector<f64>,
    cv: DVector<f64>,
    b: DVector<f64>,
    cone: Cone,
    free_cols: Vec<usize>,
    cone_cols: Vec<usize>,
    kept_rows: Vec<usize>,
    row_scale: Vec<f64>,
    c_scale: f64,
    /// set when a removed dependent row was inconsistent
    infeasible_row: bool,
    /// LU of A A' over the kept scaled rows, for solution polishing
    gram_lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

fn presolve(p: &ConicProgram) -> Presolved {
    let n = p.num_vars();
    let rows = p.num_rows();
    let mut free_cols = Vec::new();
    let mut cone_cols = Vec::new();
    let mut offset = 0;
    for blk in &p.blocks {
        let d = blk.dim();
        if blk.is_free() {
            free_cols.extend(offset..offset + d);
        } else {
            cone_cols.extend(offset..offset + d);
        }
        offset += d;
    }
    let cone = Cone::from_blocks(&p.blocks);

    // objective scaling to unit infinity norm
    let c_scale = p.c.amax().max(1e-12);

    // row equilibration
    let mut row_scale = vec![1.0; rows];
    let mut zero_rows = Vec::new();
    for i in 0..rows {
        let mut m = 0.0f64;
        for j in 0..n {
            m = m.max(p.a[(i, j)].abs());
        }
        if m == 0.0 {
            zero_rows.push(i);
            row_scale[i] = 1.0;
        } else {
            row_scale[i] = m;
        }
    }

    // independent-row selection by pivoted QR of the scaled A'
    let mut at = DMatrix::zeros(n, rows);
    for i in 0..rows {
        for j in 0..n {
            at[(j, i)] = p.a[(i, j)] / row_scale[i];
        }
    }
    let mut kept_rows: Vec<usize> = Vec::new();
    let mut infeasible_row = false;
    if rows > 0 {
        let qr = at.clone().col_piv_qr();
        let r = qr.r();
        let perm = qr.p();
        let rmax = (0..rows.min(n)).fold(0.0f64, |a, i| a.max(r[(i, i)].abs()));
        let thresh = 1e-10 * rmax.max(1.0);
        let mut rank = 0;
        for i in 0..rows.min(n) {
            if r[(i, i)].abs() > thresh {
                rank += 1;
            }
        }
        let mut indicator = vec![false; rows];
        // permutation maps: column perm.permute_columns moves original
        // columns; recover the first `rank` pivot columns
        let mut order: Vec<usize> = (0..rows).collect();
        perm.permute_rows(&mut nalgebra::DVector::from_iterator(
            rows,
            order.iter().cloned().map(|v| v as f64),
        ));
        // nalgebra's permutation API is awkward on index vectors; apply it
        // to a float vector and read back.
        let mut fv = nalgebra::DVector::from_iterator(rows, (0..rows).map(|v| v as f64));
        perm.permute_rows(&mut fv);
        for (slot, val) in fv.iter().enumerate().take(rank) {
            indicator[*val as usize] = true;
            let _ = slot;
        }
        order.clear();
        for (i, &keep) in indicator.iter().enumerate() {
            if keep {
                order.push(i);
            }
        }
        kept_rows = order;

        // consistency of removed rows: b_removed must be reproduced by the
        // same dependence that reproduces the row of A
        let removed: Vec<usize> = (0..rows).filter(|i| !indicator[*i]).collect();
        if !removed.is_empty() {
            let ak = DMatrix::from_fn(kept_rows.len(), n, |r_, c_| {
                p.a[(kept_rows[r_], c_)] / row_scale[kept_rows[r_]]
            });
            // kept rows are independent, so Ak Ak' is positive definite and
            // the dependence weights solve the normal equations
            let gram = &ak * ak.transpose();
            let gram_lu = gram.lu();
            for &ri in &removed {
                let arow = DVector::from_fn(n, |j, _| p.a[(ri, j)] / row_scale[ri]);
                let rhs = &ak * &arow;
                let w = gram_lu
                    .solve(&rhs)
                    .unwrap_or_else(|| DVector::zeros(kept_rows.len()));
                let brep: f64 = w
                    .iter()
                    .zip(&kept_rows)
                    .map(|(wi, &ki)| wi * p.b[ki] / row_scale[ki])
                    .sum();
                let btrue = p.b[ri] / row_scale[ri];
                if (brep - btrue).abs() > 1e-8 * (1.0 + btrue.abs()) {
                    infeasible_row = true;
                }
            }
        }
    }

    let kr = kept_rows.len();
    let au = DMatrix::from_fn(kr, free_cols.len(), |i, j| {
        p.a[(kept_rows[i], free_cols[j])] / row_scale[kept_rows[i]]
    });
    let av = DMatrix::from_fn(kr, cone_cols.len(), |i, j| {
        p.a[(kept_rows[i], cone_cols[j])] / row_scale[kept_rows[i]]
    });
    let b = DVector::from_fn(kr, |i, _| p.b[kept_rows[i]] / row_scale[kept_rows[i]]);
    let cu = DVector::from_fn(free_cols.len(), |j, _| p.c[free_cols[j]] / c_scale);
    let cv = DVector::from_fn(cone_cols.len(), |j, _| p.c[cone_cols[j]] / c_scale);

    let gram_lu = if kr > 0 {
        let gram = &au * au.transpose() + &av * av.transpose();
        Some(gram.lu())
    } else {
        None
    };
    Presolved {
        au,
        av,
        cu,
        cv,
        b,
        cone,
        free_cols,
        cone_cols,
        kept_rows,
        row_scale,
        c_scale,
        infeasible_row,
        gram_lu,
    }
}

/// Projects a de-homogenized candidate exactly onto the equality rows and
/// re-aligns the dual slack, clearing the last digits of the residuals.
fn polish_candidate(
    ps: &Presolved,
    u: &mut DVector<f64>,
    v: &mut [f64],
    y: &mut DVector<f64>,
    s: &mut [f64],
) {
    let Some(gram_lu) = &ps.gram_lu else { return };
    let k = ps.cone.dim;
    // primal: x -= A'(AA')^{-1}(Ax - b)
    let ax = &ps.au * &*u + &ps.av * DVector::from_column_slice(v);
    let r = &ax - &ps.b;
    if let Some(w) = gram_lu.solve(&r) {
        let du = ps.au.transpose() * &w;
        let dv = ps.av.transpose() * &w;
        *u -= du;
        for j in 0..k {
            v[j] -= dv[j];
        }
    }
    // dual: least-squares correction of y, then absorb the conic rows in s
    let mut resid = DVector::zeros(ps.cu.len() + k);
    let aut_y = ps.au.transpose() * &*y;
    let avt_y = ps.av.transpose() * &*y;
    for j in 0..ps.cu.len() {
        resid[j] = ps.cu[j] - aut_y[j];
    }
    for j in 0..k {
        resid[ps.cu.len() + j] = ps.cv[j] - s[j] - avt_y[j];
    }
    // A (c - s - A'y) with A = [Au Av] acting on the stacked residual
    let mut rhs = DVector::zeros(ps.b.len());
    for i in 0..ps.b.len() {
        let mut acc = 0.0;
        for j in 0..ps.cu.len() {
            acc += ps.au[(i, j)] * resid[j];
        }
        for j in 0..k {
            acc += ps.av[(i, j)] * resid[ps.cu.len() + j];
        }
        rhs[i] = acc;
    }
    if let Some(dy) = gram_lu.solve(&rhs) {
        *y += dy;
    }
    let avt_y = ps.av.transpose() * &*y;
    for j in 0..k {
        s[j] = ps.cv[j] - avt_y[j];
    }
    // the projections can push nonnegative coordinates a hair below zero;
    // clamping costs less residual than the dip costs cone membership
    for seg in &ps.cone.segs {
        if let Seg::NonNeg { offset, dim } = *seg {
            for j in offset..offset + dim {
                if v[j] < 0.0 {
                    v[j] = 0.0;
                }
                if s[j] < 0.0 {
                    s[j] = 0.0;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// main solve loop
// ---------------------------------------------------------------------------

struct KktFactor {
    ldl: Ldl,
    m: DMatrix<f64>,
    rows: usize,
    nf: usize,
}

fn factor_kkt(ps: &Presolved, scaling: &Scaling) -> Option<KktFactor> {
    let rows = ps.b.len();
    let nf = ps.cu.len();
    let k = ps.cone.dim;
    // M = Av H Av'
    let mut hvt = DMatrix::zeros(k, rows);
    let mut col = vec![0.0; k];
    let mut out = vec![0.0; k];
    for r in 0..rows {
        for j in 0..k {
            col[j] = ps.av[(r, j)];
        }
        scaling.apply_h(&ps.cone, &col, &mut out);
        for j in 0..k {
            hvt[(j, r)] = out[j];
        }
    }
    let m = &ps.av * &hvt;

    let q = rows + nf;
    let mut kk = DMatrix::zeros(q, q);
    // static regularization: keep the free-block perturbation at the scale
    // of Au, not of M (whose norm grows like 1/mu near convergence)
    let mdiag = (0..rows).fold(0.0f64, |a, i| a.max(m[(i, i)].abs()));
    let au_max = ps.au.amax();
    let reg1 = 1e-12 * (1.0 + mdiag);
    let reg2 = 1e-10 * (1.0 + au_max);
    for i in 0..rows {
        for j in 0..rows {
            kk[(i, j)] = m[(i, j)];
        }
        kk[(i, i)] += reg1;
    }
    for i in 0..rows {
        for j in 0..nf {
            kk[(i, rows + j)] = ps.au[(i, j)];
            kk[(rows + j, i)] = ps.au[(i, j)];
        }
    }
    for j in 0..nf {
        kk[(rows + j, rows + j)] = -reg2;
    }
    Ldl::factor(kk).map(|ldl| KktFactor { ldl, m, rows, nf })
}

impl KktFactor {
    /// One reduced-system pass (no refinement).
    fn solve3_raw(
        &self,
        ps: &Presolved,
        scaling: &Scaling,
        gu: &DVector<f64>,
        gv: &[f64],
        gy: &DVector<f64>,
    ) -> (DVector<f64>, Vec<f64>, DVector<f64>) {
        let rows = self.rows;
        let nf = self.nf;
        let k = ps.cone.dim;
        let mut hgv = vec![0.0; k];
        scaling.apply_h(&ps.cone, gv, &mut hgv);
        let av_hgv = &ps.av * DVector::from_column_slice(&hgv);

        let mut rhs = vec![0.0; rows + nf];
        for i in 0..rows {
            rhs[i] = gy[i] - av_hgv[i];
        }
        for j in 0..nf {
            rhs[rows + j] = -gu[j];
        }
        let mut sol = rhs.clone();
        self.ldl.solve_in_place(&mut sol);
        // one round against the reduced saddle (cheap, fixes the static
        // regularization perturbation)
        {
            let mut resid = rhs;
            for i in 0..rows {
                let mut acc = 0.0;
                for j in 0..rows {
                    acc += self.m[(i, j)] * sol[j];
                }
                for j in 0..nf {
                    acc += ps.au[(i, j)] * sol[rows + j];
                }
                resid[i] -= acc;
            }
            for j in 0..nf {
                let mut acc = 0.0;
                for i in 0..rows {
                    acc += ps.au[(i, j)] * sol[i];
                }
                resid[rows + j] -= acc;
            }
            let mut corr = resid;
            self.ldl.solve_in_place(&mut corr);
            for (sv, cv_) in sol.iter_mut().zip(&corr) {
                *sv += cv_;
            }
        }

        let dy = DVector::from_fn(rows, |i, _| sol[i]);
        let du = DVector::from_fn(nf, |j, _| sol[rows + j]);
        // dv = H(gv + Av' dy)
        let avt_dy = ps.av.transpose() * &dy;
        let mut pre = vec![0.0; k];
        for j in 0..k {
            pre[j] = gv[j] + avt_dy[j];
        }
        let mut dv = vec![0.0; k];
        scaling.apply_h(&ps.cone, &pre, &mut dv);
        (du, dv, dy)
    }

    /// Solves
    ///   -Au' dy            = gu
    ///   Hinv(dv) - Av' dy  = gv
    ///   Au du + Av dv      = gy
    /// with full-system iterative refinement (the H-elimination of dv
    /// amplifies factorization error by the scaling norm near convergence).
    fn solve3(
        &self,
        ps: &Presolved,
        scaling: &Scaling,
        gu: &DVector<f64>,
        gv: &[f64],
        gy: &DVector<f64>,
    ) -> (DVector<f64>, Vec<f64>, DVector<f64>) {
        let rows = self.rows;
        let nf = self.nf;
        let k = ps.cone.dim;
        let (mut du, mut dv, mut dy) = self.solve3_raw(ps, scaling, gu, gv, gy);
        for _ in 0..3 {
            // residuals of the three-block system
            let aut_dy = ps.au.transpose() * &dy;
            let avt_dy = ps.av.transpose() * &dy;
            let mut hinv_dv = vec![0.0; k];
            scaling.apply_hinv(&ps.cone, &dv, &mut hinv_dv);
            let ru = DVector::from_fn(nf, |j, _| gu[j] + aut_dy[j]);
            let mut rv = vec![0.0; k];
            for j in 0..k {
                rv[j] = gv[j] - hinv_dv[j] + avt_dy[j];
            }
            let ax = &ps.au * &du + &ps.av * DVector::from_column_slice(&dv);
            let ry = DVector::from_fn(rows, |i, _| gy[i] - ax[i]);

            let mut worst = ru.amax().max(ry.amax());
            for v in &rv {
                worst = worst.max(v.abs());
            }
            if worst < 1e-14 {
                break;
            }
            let (cu_, cv_, cy_) = self.solve3_raw(ps, scaling, &ru, &rv, &ry);
            du += cu_;
            for j in 0..k {
                dv[j] += cv_[j];
            }
            dy += cy_;
        }
        (du, dv, dy)
    }
}

pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Solution {
    program.validate();
    let ps = presolve(program);
    let rows = ps.b.len();
    let nf = ps.cu.len();
    let k = ps.cone.dim;

    let empty_solution = |status: Status| Solution {
        status,
        x: vec![0.0; program.num_vars()],
        y: vec![0.0; program.num_rows()],
        s: vec![0.0; program.num_vars()],
        obj: 0.0,
        residuals: Residuals {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        },
        iterations: 0,
    };

    if ps.infeasible_row {
        return empty_solution(Status::PrimalInfeasible);
    }
    if k == 0 && nf == 0 {
        return empty_solution(if ps.b.amax() <= 1e-12 {
            Status::Optimal
        } else {
            Status::PrimalInfeasible
        });
    }

    // state
    let mut u = DVector::<f64>::zeros(nf);
    let mut v = ps.cone.identity();
    let mut y = DVector::<f64>::zeros(rows);
    let mut s = ps.cone.identity();
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;
    let degree = ps.cone.degree + 1;

    let b_norm = 1.0 + ps.b.norm();
    let c_norm = 1.0 + (ps.cu.norm_squared() + ps.cv.norm_squared()).sqrt();

    let assemble = |status: Status,
                    u: &DVector<f64>,
                    v: &[f64],
                    y: &DVector<f64>,
                    s: &[f64],
                    tau: f64,
                    iterations: usize,
                    resid: Residuals| {
        let scale_back = |val: f64| val / tau;
        let mut x_full = vec![0.0; program.num_vars()];
        for (j, &col) in ps.free_cols.iter().enumerate() {
            x_full[col] = scale_back(u[j]);
        }
        for (j, &col) in ps.cone_cols.iter().enumerate() {
            x_full[col] = scale_back(v[j]);
        }
        let mut y_full = vec![0.0; program.num_rows()];
        for (i, &row) in ps.kept_rows.iter().enumerate() {
            y_full[row] = ps.c_scale * y[i] / (tau * ps.row_scale[row]);
        }
        let mut s_full = vec![0.0; program.num_vars()];
        for (j, &col) in ps.cone_cols.iter().enumerate() {
            s_full[col] = ps.c_scale * s[j] / tau;
        }
        let obj: f64 = program.c.iter().zip(&x_full).map(|(a, b)| a * b).sum();
        Solution {
            status,
            x: x_full,
            y: y_full,
            s: s_full,
            obj,
            residuals: resid,
            iterations,
        }
    };

    let classify = |sol: Solution, fallback: Status, settings: &SolverSettings| -> Solution {
        if sol.residuals.primal <= settings.tol_feas
            && sol.residuals.dual <= settings.tol_feas
            && sol.residuals.gap <= settings.tol_gap
        {
            Solution {
                status: Status::Optimal,
                ..sol
            }
        } else {
            Solution {
                status: fallback,
                ..sol
            }
        }
    };

    let mut best: Option<(f64, Solution)> = None;
    let mut stall_reference = f64::INFINITY;
    let mut stall_count = 0usize;

    for iter in 0..settings.max_iter {
        // residuals of the homogeneous model
        let ax = &ps.au * &u + &ps.av * DVector::from_column_slice(&v);
        let rp = &ax - &ps.b * tau;
        let aut_y = ps.au.transpose() * &y;
        let avt_y = ps.av.transpose() * &y;
        let rd_u = &ps.cu * tau - &aut_y;
        let mut rd_v = vec![0.0; k];
        for j in 0..k {
            rd_v[j] = ps.cv[j] * tau - avt_y[j] - s[j];
        }
        let cx = ps.cu.dot(&u) + ps.cv.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let by = ps.b.dot(&y);
        let rg = by - cx - kappa;
        let vs: f64 = v.iter().zip(&s).map(|(a, b)| a * b).sum();
        let mu = (vs + tau * kappa) / degree as f64;

        // convergence on the de-homogenized iterate, with an exact
        // equality-projection polish once it is nearly converged
        let eval_cand = |cu_: &DVector<f64>,
                         cv_: &[f64],
                         cy_: &DVector<f64>,
                         cs_: &[f64]|
         -> Residuals {
            let ax_ = &ps.au * cu_ + &ps.av * DVector::from_column_slice(cv_);
            let pres = (&ax_ - &ps.b).norm() / b_norm;
            let aut = ps.au.transpose() * cy_;
            let avt = ps.av.transpose() * cy_;
            let mut sq = 0.0;
            for j in 0..nf {
                sq += (ps.cu[j] - aut[j]).powi(2);
            }
            for j in 0..k {
                sq += (ps.cv[j] - avt[j] - cs_[j]).powi(2);
            }
            let dres = sq.sqrt() / c_norm;
            let pobj = ps.cu.dot(cu_)
                + ps.cv.iter().zip(cv_).map(|(a, b)| a * b).sum::<f64>();
            let dobj = ps.b.dot(cy_);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
            Residuals {
                primal: pres,
                dual: dres,
                gap,
            }
        };
        let mut cand_u = &u / tau;
        let mut cand_v: Vec<f64> = v.iter().map(|x| x / tau).collect();
        let mut cand_y = &y / tau;
        let mut cand_s: Vec<f64> = s.iter().map(|x| x / tau).collect();
        let mut resid = eval_cand(&cand_u, &cand_v, &cand_y, &cand_s);
        let mut merit = resid.primal.max(resid.dual).max(resid.gap);
        if merit < 1e-4 {
            let mut pu = cand_u.clone();
            let mut pv = cand_v.clone();
            let mut py = cand_y.clone();
            let mut psl = cand_s.clone();
            polish_candidate(&ps, &mut pu, &mut pv, &mut py, &mut psl);
            let presid = eval_cand(&pu, &pv, &py, &psl);
            let pmerit = presid.primal.max(presid.dual).max(presid.gap);
            if pmerit < merit {
                cand_u = pu;
                cand_v = pv;
                cand_y = py;
                cand_s = psl;
                resid = presid;
                merit = pmerit;
            }
        }
        if settings.trace {
            println!(
                "iter {iter:3}  mu {mu:9.2e}  pres {:9.2e}  dres {:9.2e}  gap {:9.2e}  tau {tau:9.2e}  kappa {kappa:9.2e}  pobj {:12.5e}",
                resid.primal, resid.dual, resid.gap, cx / tau
            );
        }
        if best.as_ref().map_or(true, |(m, _)| merit < *m) {
            best = Some((
                merit,
                assemble(
                    Status::IterationLimit,
                    &cand_u,
                    &cand_v,
                    &cand_y,
                    &cand_s,
                    1.0,
                    iter,
                    resid,
                ),
            ));
        }
        if resid.primal <= settings.tol_feas
            && resid.dual <= settings.tol_feas
            && resid.gap <= settings.tol_gap
        {
            return assemble(
                Status::Optimal,
                &cand_u,
                &cand_v,
                &cand_y,
                &cand_s,
                1.0,
                iter,
                resid,
            );
        }
        // the iterate corrupted after near-convergence; keep the best one
        if let Some((bm, _)) = &best {
            if merit > 1e4 * *bm && *bm < 1e-6 {
                break;
            }
        }
        // stall guard: no merit progress at all across a window
        if merit < stall_reference * 0.999 {
            stall_reference = merit;
            stall_count = 0;
        } else {
            stall_count += 1;
            if stall_count >= 12 {
                break;
            }
        }

        // infeasibility certificates
        if by > 0.0 {
            let mut cert = aut_y.norm_squared();
            for j in 0..k {
                cert += (avt_y[j] + s[j]).powi(2);
            }
            let cert = cert.sqrt() / by;
            if cert <= settings.tol_feas * 0.1 {
                return assemble(
                    Status::PrimalInfeasible,
                    &u,
                    &v,
                    &y,
                    &s,
                    tau.max(1e-300),
                    iter,
                    resid,
                );
            }
        }
        if cx < 0.0 {
            let cert = ax.norm() / (-cx);
            if cert <= settings.tol_feas * 0.1 {
                return assemble(
                    Status::DualInfeasible,
                    &u,
                    &v,
                    &y,
                    &s,
                    tau.max(1e-300),
                    iter,
                    resid,
                );
            }
        }
        if mu < 1e-16 || tau < 1e-12 * kappa.max(1.0) {
            let (_, sol) = best.take().unwrap();
            return classify(sol, Status::Numerical, settings);
        }

        // scaling and KKT factorization
        let scaling = match compute_scaling(&ps.cone, &v, &s, settings.debug_checks) {
            Some(sc) => sc,
            None => {
                let (_, sol) = best.take().unwrap();
                return classify(sol, Status::Numerical, settings);
            }
        };
        let kkt = match factor_kkt(&ps, &scaling) {
            Some(f) => f,
            None => {
                let (_, sol) = best.take().unwrap();
                return classify(sol, Status::Numerical, settings);
            }
        };

        let neg_cu = -&ps.cu;
        let neg_cv: Vec<f64> = ps.cv.iter().map(|x| -x).collect();
        let (x1u, x1v, y1) = kkt.solve3(&ps, &scaling, &neg_cu, &neg_cv, &ps.b);
        let denom_base = ps.b.dot(&y1)
            - (ps.cu.dot(&x1u) + ps.cv.iter().zip(&x1v).map(|(a, b)| a * b).sum::<f64>())
            + kappa / tau;

        let mut lam_sq = vec![0.0; k];
        scaling.lambda_square(&ps.cone, &mut lam_sq);

        // one direction computation shared by predictor and corrector
        let direction = |eta: f64,
                             d: &[f64],
                             d_tau: f64|
         -> (DVector<f64>, Vec<f64>, DVector<f64>, Vec<f64>, f64, f64) {
            let mut t_d = vec![0.0; k];
            scaling.dual_from_complementarity(&ps.cone, d, &mut t_d);
            let gu = DVector::from_fn(nf, |j, _| -eta * rd_u[j]);
            let mut gv = vec![0.0; k];
            for j in 0..k {
                gv[j] = -eta * rd_v[j] + t_d[j];
            }
            let gy = DVector::from_fn(rows, |i, _| -eta * rp[i]);
            let (x2u, x2v, y2) = kkt.solve3(&ps, &scaling, &gu, &gv, &gy);
            let num = -eta * rg + d_tau / tau - ps.b.dot(&y2)
                + (ps.cu.dot(&x2u) + ps.cv.iter().zip(&x2v).map(|(a, b)| a * b).sum::<f64>());
            let dtau = num / denom_base;
            let du = &x2u + &x1u * dtau;
            let mut dv = vec![0.0; k];
            for j in 0..k {
                dv[j] = x2v[j] + x1v[j] * dtau;
            }
            let dy = &y2 + &y1 * dtau;
            // recover ds from the dual feasibility row (and dkappa from the
            // gap row) instead of the complementarity identity: near
            // convergence the latter subtracts two O(1/mu) quantities
            let avt_dy_full = ps.av.transpose() * &dy;
            let mut ds = vec![0.0; k];
            for j in 0..k {
                ds[j] = eta * rd_v[j] - avt_dy_full[j] + ps.cv[j] * dtau;
            }
            let dkappa = ps.b.dot(&dy)
                - (ps.cu.dot(&du) + ps.cv.iter().zip(&dv).map(|(a, b)| a * b).sum::<f64>())
                + eta * rg;
            let _ = d_tau;
            (du, dv, dy, ds, dtau, dkappa)
        };

        // predictor (affine) direction
        let d_aff: Vec<f64> = lam_sq.iter().map(|x| -x).collect();
        let (_du_a, dv_a, _dy_a, ds_a, dtau_a, dkappa_a) = direction(1.0, &d_aff, -tau * kappa);

        let mut dv_a_sc = vec![0.0; k];
        scaling.scale_v(&ps.cone, &dv_a, &mut dv_a_sc);
        let mut ds_a_sc = vec![0.0; k];
        scaling.scale_s(&ps.cone, &ds_a, &mut ds_a_sc);
        let mut alpha_aff = scaling
            .max_step(&ps.cone, &dv_a_sc)
            .min(scaling.max_step(&ps.cone, &ds_a_sc));
        if dtau_a < 0.0 {
            alpha_aff = alpha_aff.min(-tau / dtau_a);
        }
        if dkappa_a < 0.0 {
            alpha_aff = alpha_aff.min(-kappa / dkappa_a);
        }
        let alpha_aff = alpha_aff.min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector (combined) direction
        let mut corr = vec![0.0; k];
        scaling.jordan_product(&ps.cone, &dv_a_sc, &ds_a_sc, &mut corr);
        let mut d_comb = vec![0.0; k];
        for j in 0..k {
            d_comb[j] = -lam_sq[j] - corr[j];
        }
        // + sigma*mu*e on the Jordan identity
        add_identity(&ps.cone, sigma * mu, &mut d_comb);
        let dtau_rhs = sigma * mu - tau * kappa - dtau_a * dkappa_a;
        let (du, dv, dy, ds, dtau, dkappa) = direction(1.0 - sigma, &d_comb, dtau_rhs);

        let mut dv_sc = vec![0.0; k];
        scaling.scale_v(&ps.cone, &dv, &mut dv_sc);
        let mut ds_sc = vec![0.0; k];
        scaling.scale_s(&ps.cone, &ds, &mut ds_sc);
        let mut alpha = scaling
            .max_step(&ps.cone, &dv_sc)
            .min(scaling.max_step(&ps.cone, &ds_sc));
        if dtau < 0.0 {
            alpha = alpha.min(-tau / dtau);
        }
        if dkappa < 0.0 {
            alpha = alpha.min(-kappa / dkappa);
        }
        let alpha = (0.99 * alpha).min(1.0);
        if !alpha.is_finite() || alpha <= 0.0 {
            let (_, sol) = best.take().unwrap();
            return classify(sol, Status::Numerical, settings);
        }

        u += &du * alpha;
        for j in 0..k {
            v[j] += alpha * dv[j];
            s[j] += alpha * ds[j];
        }
        y += &dy * alpha;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    let (_, sol) = best.take().unwrap();
    classify(sol, Status::IterationLimit, settings)
}

fn add_identity(cone: &Cone, t: f64, out: &mut [f64]) {
    for seg in &cone.segs {
        match *seg {
            Seg::NonNeg { offset, dim } => {
                for val in out[offset..offset + dim].iter_mut() {
                    *val += t;
                }
            }
            Seg::Psd { offset, order } => {
                let mut idx = offset;
                for i in 0..order {
                    out[idx] += t;
                    idx += order - i;
                }
            }
        }
    }
}

/// Recomputes solution residuals from scratch against the original data.
pub fn residuals(program: &ConicProgram, sol: &Solution) -> Residuals {
    let x = DVector::from_column_slice(&sol.x);
    let y = DVector::from_column_slice(&sol.y);
    let s = DVector::from_column_slice(&sol.s);
    let primal = (&program.a * &x - &program.b).norm() / (1.0 + program.b.norm());
    // dual: A'y + s = c with s zero on free coordinates
    let aty = program.a.transpose() * &y;
    let mut dual_sq = 0.0;
    for j in 0..program.num_vars() {
        let r = aty[j] + s[j] - program.c[j];
        dual_sq += r * r;
    }
    let dual = dual_sq.sqrt() / (1.0 + program.c.norm());
    let cx = program.c.dot(&x);
    let by = program.b.dot(&y);
    let gap = (cx - by).abs() / (1.0 + cx.abs());
    Residuals { primal, dual, gap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::program::BlockKind;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn one_dimensional_lp() {
        // min x s.t. x - t = 1, x, t >= 0  (i.e. x >= 1)
        let program = ConicProgram {
            c: DVector::from_vec(vec![1.0, 0.0]),
            a: DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            b: DVector::from_vec(vec![1.0]),
            blocks: vec![BlockKind::NonNeg { dim: 2 }],
            names: names(2),
        };
        let sol = solve(&program, &SolverSettings::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.obj - 1.0).abs() < 1e-7, "obj = {}", sol.obj);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn forced_diagonal_sdp() {
        // min trace(X) s.t. X11 = 1, X psd (order 2) -> 1.0 at X = e1 e1'
        let program = ConicProgram {
            c: DVector::from_vec(vec![1.0, 0.0, 1.0]),
            a: DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
            b: DVector::from_vec(vec![1.0]),
            blocks: vec![BlockKind::Psd { order: 2 }],
            names: names(3),
        };
        let sol = solve(&program, &SolverSettings::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.obj - 1.0).abs() < 1e-7, "obj = {}", sol.obj);
        assert!(sol.x[0] > 1.0 - 1e-6 && sol.x[2].abs() < 1e-6);
    }

    #[test]
    fn detects_primal_infeasible() {
        // x >= 0, x = -1
        let program = ConicProgram {
            c: DVector::from_vec(vec![0.0]),
            a: DMatrix::from_row_slice(1, 1, &[1.0]),
            b: DVector::from_vec(vec![-1.0]),
            blocks: vec![BlockKind::NonNeg { dim: 1 }],
            names: names(1),
        };
        let sol = solve(&program, &SolverSettings::default());
        assert_eq!(sol.status, Status::PrimalInfeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x s.t. x >= 0 (no equalities): unbounded below
        let program = ConicProgram {
            c: DVector::from_vec(vec![-1.0]),
            a: DMatrix::zeros(0, 1),
            b: DVector::zeros(0),
            blocks: vec![BlockKind::NonNeg { dim: 1 }],
            names: names(1),
        };
        let sol = solve(&program, &SolverSettings::default());
        assert_eq!(sol.status, Status::DualInfeasible);
    }

    #[test]
    fn free_variable_lp() {
        // min x + 2z s.t. x + z = 3, x free, z >= 0 -> x = 3, z = 0, obj 3
        let program = ConicProgram {
            c: DVector::from_vec(vec![1.0, 2.0]),
            a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            b: DVector::from_vec(vec![3.0]),
            blocks: vec![BlockKind::Free { dim: 1 }, BlockKind::NonNeg { dim: 1 }],
            names: names(2),
        };
        let sol = solve(&program, &SolverSettings::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.obj - 3.0).abs() < 1e-7);
        assert!((sol.x[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // duplicated equality row
        let program = ConicProgram {
            c: DVector::from_vec(vec![1.0, 0.0]),
            a: DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, -2.0]),
            b: DVector::from_vec(vec![1.0, 2.0]),
            blocks: vec![BlockKind::NonNeg { dim: 2 }],
            names: names(2),
        };
        let sol = solve(&program, &SolverSettings::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.obj - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inconsistent_redundant_row_is_infeasible() {
        let program = ConicProgram {
            c: DVector::from_vec(vec![1.0, 0.0]),
            a: DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, -2.0]),
            b: DVector::from_vec(vec![1.0, 5.0]),
            blocks: vec![BlockKind::NonNeg { dim: 2 }],
            names: names(2),
        };
        let sol = solve(&program, &SolverSettings::default());
        assert_eq!(sol.status, Status::PrimalInfeasible);
    }

    #[test]
    fn deterministic_bitwise() {
        let program = ConicProgram {
            c: DVector::from_vec(vec![1.0, 0.0, 1.0]),
            a: DMatrix::from_row_slice(1, 3, &[1.0, 0.5, 0.0]),
            b: DVector::from_vec(vec![1.0]),
            blocks: vec![BlockKind::Psd { order: 2 }],
            names: names(3),
        };
        let s1 = solve(&program, &SolverSettings::default());
        let s2 = solve(&program, &SolverSettings::default());
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.y, s2.y);
        assert_eq!(s1.iterations, s2.iterations);
    }
}
