//! Multiplier-cone certificates.
//!
//! Each builder encodes membership of a function in one of the multiplier
//! cones as conic blocks plus linear couplings:
//!
//! - affine nonnegative on X = [0,1]^n intersect {Ax = d} (LP duality),
//! - affine nonnegative on a convex level set L = {x'Qx + 2c'x <= b}
//!   (dual of the Schur-complement SDP form),
//! - affine nonnegative on V = X intersect (levels) and on the cut-extended
//!   set W (scalar level multipliers folded into a PSD matrix condition),
//! - convex quadratics nonnegative on X,
//! - cubic functions with nonnegative coefficients.
//!
//! `verify_certificate` re-checks a solved assignment: cone membership,
//! coupling residuals, and sampled nonnegativity of the certified function
//! over its ground set.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::builder::{BuiltProgram, ProgramBuilder, PsdVar};
use crate::bounds::expr::{LinExpr, QuadExpr, VarId};
use crate::conic::svec::smat;
use crate::conic::{solve, SolverSettings, Status};
use crate::model::{factorize_psd, AffineFunction, QuadraticFunction, SymmetricMatrix};

#[derive(Debug, Error)]
pub enum CertError {
    #[error("ground set is empty")]
    EmptyGroundSet,
    #[error("constraint matrix is not positive semidefinite")]
    NotPsd,
    #[error("no strict interior point (Slater condition fails)")]
    NoSlater,
    #[error("conic solver failed with status {0:?}")]
    Solver(Status),
}

/// X = [0,1]^n intersect {Ax = d}.
#[derive(Debug, Clone)]
pub struct PolyhedralGround {
    pub n: usize,
    pub a: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl PolyhedralGround {
    pub fn box_only(n: usize) -> Self {
        Self {
            n,
            a: DMatrix::zeros(0, n),
            d: DVector::zeros(0),
        }
    }

    pub fn simplex(n: usize) -> Self {
        Self {
            n,
            a: DMatrix::from_element(1, n, 1.0),
            d: DVector::from_element(1, 1.0),
        }
    }

    pub fn p(&self) -> usize {
        self.d.len()
    }
}

/// Convex level set L = {x : x'Qx + 2c'x <= b} with Q = R'R.
#[derive(Debug, Clone)]
pub struct ConvexLevelSet {
    pub q: SymmetricMatrix,
    pub c: Vec<f64>,
    pub b: f64,
    pub r: DMatrix<f64>,
}

impl ConvexLevelSet {
    pub fn new(q: SymmetricMatrix, c: Vec<f64>, b: f64) -> Result<Self, CertError> {
        let r = factorize_psd(&q, None).map_err(|_| CertError::NotPsd)?;
        Ok(Self { q, c, b, r })
    }

    pub fn constraint_fn(&self) -> QuadraticFunction {
        QuadraticFunction {
            q: self.q.clone(),
            c: self.c.clone(),
            c0: -self.b,
        }
    }

    /// Unconstrained minimum of x'Qx + 2c'x; None means unbounded below.
    pub fn quad_min(&self) -> Option<f64> {
        let n = self.q.order();
        let dense = self.q.to_dense();
        let eig = dense.clone().symmetric_eigen();
        let maxev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let tol = 1e-10 * maxev.max(1.0);
        // solve Qx = -c on the range of Q
        let mut xstar = DVector::zeros(n);
        let cvec = DVector::from_column_slice(&self.c);
        for k in 0..n {
            let lam = eig.eigenvalues[k];
            let vk = eig.eigenvectors.column(k);
            let proj = vk.dot(&cvec);
            if lam > tol {
                xstar += vk * (-proj / lam);
            } else if proj.abs() > 1e-8 * (1.0 + cvec.norm()) {
                return None; // descent direction in the kernel
            }
        }
        Some(cvec.dot(&xstar))
    }

    /// Slater point strictly inside L, if one exists.
    pub fn slater_point(&self) -> Result<Vec<f64>, CertError> {
        let n = self.q.order();
        match self.quad_min() {
            None => {
                // walk down -c until strictly feasible
                let mut x = vec![0.0; n];
                let f = self.constraint_fn();
                for _ in 0..60 {
                    if f.eval(&x) < -1e-6 {
                        return Ok(x);
                    }
                    for (xi, ci) in x.iter_mut().zip(&self.c) {
                        *xi -= ci;
                    }
                }
                if f.eval(&x) < -1e-6 {
                    Ok(x)
                } else {
                    Err(CertError::NoSlater)
                }
            }
            Some(minval) => {
                if minval < self.b - 1e-6 {
                    let dense = self.q.to_dense();
                    let eig = dense.symmetric_eigen();
                    let maxev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
                    let tol = 1e-10 * maxev.max(1.0);
                    let cvec = DVector::from_column_slice(&self.c);
                    let mut xstar = DVector::zeros(n);
                    for k in 0..n {
                        let lam = eig.eigenvalues[k];
                        let vk = eig.eigenvectors.column(k);
                        if lam > tol {
                            xstar += vk * (-vk.dot(&cvec) / lam);
                        }
                    }
                    Ok(xstar.iter().cloned().collect())
                } else {
                    Err(CertError::NoSlater)
                }
            }
        }
    }
}

/// Cut family parameters for the W ground set.
#[derive(Debug, Clone)]
pub struct CutSpec {
    pub u: Vec<f64>,
    pub u_omega: f64,
}

/// Ground set over which a certified function must be nonnegative.
#[derive(Debug, Clone)]
pub enum GroundSet {
    /// all of R^n (main residual)
    Reals { n: usize },
    /// nonnegative orthant (coefficient cones)
    Orthant { n: usize },
    X(PolyhedralGround),
    Level(ConvexLevelSet),
    /// V = X intersect all levels
    Intersection {
        x: PolyhedralGround,
        levels: Vec<ConvexLevelSet>,
    },
    /// W = V intersect all valid cuts
    CutSet {
        x: PolyhedralGround,
        levels: Vec<ConvexLevelSet>,
        cut: CutSpec,
    },
}

// ---------------------------------------------------------------------------
// certificate records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum BlockRef {
    NonNeg { name: String, ids: Vec<VarId> },
    Psd { name: String, var: PsdVar },
}

#[derive(Debug, Clone)]
pub enum CertifiedFn {
    Affine { f: Vec<LinExpr>, g: LinExpr },
    Quadratic(QuadExpr),
}

/// Everything needed to re-verify one multiplier certificate after solving.
#[derive(Debug, Clone)]
pub struct CertRecord {
    pub name: String,
    pub ground: GroundSet,
    pub blocks: Vec<BlockRef>,
    /// builder row indices of coupling equalities owned by this certificate
    pub rows: Vec<usize>,
    pub certified: CertifiedFn,
}

/// Affine multiplier backed by a certificate.
pub struct AffineCert {
    pub f: Vec<LinExpr>,
    pub g: LinExpr,
    pub record: CertRecord,
}

/// Convex-quadratic multiplier backed by a certificate.
pub struct QuadCert {
    pub quad: QuadExpr,
    pub record: CertRecord,
}

/// Affine function certified nonnegative on X via LP duality:
/// f = A'lam + mu - nu, g = -d'lam + e'nu + s with mu, nu, s >= 0.
pub fn add_affine_on_x(
    pb: &mut ProgramBuilder,
    ground: &PolyhedralGround,
    tag: &str,
) -> AffineCert {
    let n = ground.n;
    let p = ground.p();
    let lam = pb.free_vars(&format!("{tag}.lam"), p);
    let mu = pb.nonneg_vars(&format!("{tag}.mu"), n);
    let nu = pb.nonneg_vars(&format!("{tag}.nu"), n);
    let s = pb.nonneg_var(format!("{tag}.s"));

    let mut f = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = LinExpr::zero();
        for (j, &lj) in lam.iter().enumerate() {
            e.add_var(lj, ground.a[(j, i)]);
        }
        e.add_var(mu[i], 1.0);
        e.add_var(nu[i], -1.0);
        f.push(e);
    }
    let mut g = LinExpr::zero();
    for (j, &lj) in lam.iter().enumerate() {
        g.add_var(lj, -ground.d[j]);
    }
    for &nj in &nu {
        g.add_var(nj, 1.0);
    }
    g.add_var(s, 1.0);

    let mut nn_ids = mu.clone();
    nn_ids.extend(nu.iter());
    nn_ids.push(s);
    let record = CertRecord {
        name: tag.to_string(),
        ground: GroundSet::X(ground.clone()),
        blocks: vec![BlockRef::NonNeg {
            name: format!("{tag}.multipliers"),
            ids: nn_ids,
        }],
        rows: Vec::new(),
        certified: CertifiedFn::Affine {
            f: f.clone(),
            g: g.clone(),
        },
    };
    AffineCert { f, g, record }
}

/// Affine function certified nonnegative on a convex level set via the dual
/// of the Schur-form SDP: [[Y, y], [y', y0]] psd, f = -2(R'y + c y0),
/// g = I.Y + b y0 + t with t >= 0.
pub fn add_affine_on_level(
    pb: &mut ProgramBuilder,
    level: &ConvexLevelSet,
    tag: &str,
) -> AffineCert {
    let n = level.q.order();
    let r = level.r.nrows();
    let block = pb.psd_var(&format!("{tag}.Y"), r + 1);
    let t = pb.nonneg_var(format!("{tag}.t"));

    let mut f = Vec::with_capacity(n);
    for kcol in 0..n {
        let mut e = LinExpr::zero();
        for i in 0..r {
            let y_i = block.entry(i, r);
            e.add_assign(&y_i, -2.0 * level.r[(i, kcol)]);
        }
        e.add_assign(&block.entry(r, r), -2.0 * level.c[kcol]);
        f.push(e);
    }
    let mut g = LinExpr::zero();
    for i in 0..r {
        g.add_assign(&block.entry(i, i), 1.0);
    }
    g.add_assign(&block.entry(r, r), level.b);
    g.add_var(t, 1.0);

    let record = CertRecord {
        name: tag.to_string(),
        ground: GroundSet::Level(level.clone()),
        blocks: vec![
            BlockRef::Psd {
                name: format!("{tag}.Y"),
                var: block,
            },
            BlockRef::NonNeg {
                name: format!("{tag}.t"),
                ids: vec![t],
            },
        ],
        rows: Vec::new(),
        certified: CertifiedFn::Affine {
            f: f.clone(),
            g: g.clone(),
        },
    };
    AffineCert { f, g, record }
}

/// Affine function certified nonnegative on V (levels = convex constraints)
/// or on W when `cut` is given: scalar level multipliers tau_k plus the RLT
/// couplings fold into one PSD condition
///   M(alpha + sum tau_k g_k + lam'(Ax-d) + mu'(x-e) - nu'x [+ cut(S)]) psd.
pub fn add_affine_on_intersection(
    pb: &mut ProgramBuilder,
    ground: &PolyhedralGround,
    levels: &[ConvexLevelSet],
    cut: Option<&CutSpec>,
    tag: &str,
) -> AffineCert {
    let n = ground.n;
    let p = ground.p();
    let big = pb.psd_var(&format!("{tag}.P"), n + 1);
    let tau = pb.nonneg_vars(&format!("{tag}.tau"), levels.len());
    let lam = pb.free_vars(&format!("{tag}.lam"), p);
    let mu = pb.nonneg_vars(&format!("{tag}.mu"), n);
    let nu = pb.nonneg_vars(&format!("{tag}.nu"), n);
    let cut_s = cut.map(|_| pb.psd_var(&format!("{tag}.S"), n));

    // inner quadratic carried by the certificate variables
    let mut iq = QuadExpr::zero(n);
    for (k, level) in levels.iter().enumerate() {
        iq.add_known_times_expr(&level.constraint_fn(), &LinExpr::var(tau[k]));
    }
    for i in 0..n {
        for (j, &lj) in lam.iter().enumerate() {
            iq.c[i].add_var(lj, 0.5 * ground.a[(j, i)]);
        }
        iq.c[i].add_var(mu[i], 0.5);
        iq.c[i].add_var(nu[i], -0.5);
    }
    for (j, &lj) in lam.iter().enumerate() {
        iq.c0.add_var(lj, -ground.d[j]);
    }
    for &mj in &mu {
        iq.c0.add_var(mj, -1.0);
    }
    if let (Some(s), Some(cs)) = (&cut_s, cut) {
        for i in 0..n {
            for j in i..n {
                iq.q_entry_mut(i, j).add_assign(&s.entry(i, j), 1.0);
            }
            iq.c[i].add_assign(&s.entry(i, i), -0.5 * cs.u_omega / cs.u[i]);
        }
    }

    // couple the quadratic block of P to iq's quadratic part (the affine
    // alpha contributes nothing there); border and corner define alpha
    let start = pb.len_rows();
    for i in 0..n {
        for j in i..n {
            let row = big.entry(i, j).minus(iq.q_entry(i, j));
            pb.eq_zero(row, format!("{tag}.quad[{i},{j}]"));
        }
    }
    let rows: Vec<usize> = (start..pb.len_rows()).collect();

    let mut f = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = big.entry(i, n);
        e.scale(2.0);
        e.add_assign(&iq.c[i], -2.0);
        f.push(e);
    }
    let g = big.entry(n, n).minus(&iq.c0);

    let mut nn_ids = tau.clone();
    nn_ids.extend(mu.iter());
    nn_ids.extend(nu.iter());
    let mut blocks = vec![
        BlockRef::Psd {
            name: format!("{tag}.P"),
            var: big,
        },
        BlockRef::NonNeg {
            name: format!("{tag}.multipliers"),
            ids: nn_ids,
        },
    ];
    if let Some(s) = &cut_s {
        blocks.push(BlockRef::Psd {
            name: format!("{tag}.S"),
            var: *s,
        });
    }
    let ground_set = match cut {
        None => GroundSet::Intersection {
            x: ground.clone(),
            levels: levels.to_vec(),
        },
        Some(cs) => GroundSet::CutSet {
            x: ground.clone(),
            levels: levels.to_vec(),
            cut: cs.clone(),
        },
    };
    let record = CertRecord {
        name: tag.to_string(),
        ground: ground_set,
        blocks,
        rows,
        certified: CertifiedFn::Affine {
            f: f.clone(),
            g: g.clone(),
        },
    };
    AffineCert { f, g, record }
}

/// Convex quadratic certified nonnegative on X:
/// M(q + lam'(Ax-d) + mu'(x-e) - nu'x) psd.
pub fn add_convex_quad_on_x(
    pb: &mut ProgramBuilder,
    ground: &PolyhedralGround,
    tag: &str,
) -> QuadCert {
    let n = ground.n;
    let p = ground.p();
    let big = pb.psd_var(&format!("{tag}.P"), n + 1);
    let lam = pb.free_vars(&format!("{tag}.lam"), p);
    let mu = pb.nonneg_vars(&format!("{tag}.mu"), n);
    let nu = pb.nonneg_vars(&format!("{tag}.nu"), n);

    // affine part added inside M(.)
    let mut aff_c = vec![LinExpr::zero(); n];
    let mut aff_c0 = LinExpr::zero();
    for i in 0..n {
        for (j, &lj) in lam.iter().enumerate() {
            aff_c[i].add_var(lj, 0.5 * ground.a[(j, i)]);
        }
        aff_c[i].add_var(mu[i], 0.5);
        aff_c[i].add_var(nu[i], -0.5);
    }
    for (j, &lj) in lam.iter().enumerate() {
        aff_c0.add_var(lj, -ground.d[j]);
    }
    for &mj in &mu {
        aff_c0.add_var(mj, -1.0);
    }

    let mut quad = QuadExpr::zero(n);
    for i in 0..n {
        for j in i..n {
            *quad.q_entry_mut(i, j) = big.entry(i, j);
        }
        quad.c[i] = big.entry(i, n).minus(&aff_c[i]);
    }
    quad.c0 = big.entry(n, n).minus(&aff_c0);

    let mut nn_ids = mu.clone();
    nn_ids.extend(nu.iter());
    let record = CertRecord {
        name: tag.to_string(),
        ground: GroundSet::X(ground.clone()),
        blocks: vec![
            BlockRef::Psd {
                name: format!("{tag}.P"),
                var: big,
            },
            BlockRef::NonNeg {
                name: format!("{tag}.multipliers"),
                ids: nn_ids,
            },
        ],
        rows: Vec::new(),
        certified: CertifiedFn::Quadratic(quad.clone()),
    };
    QuadCert { quad, record }
}

// ---------------------------------------------------------------------------
// ground-set geometry: interior points, membership, sampling
// ---------------------------------------------------------------------------

/// Maximal box-margin point of X: solves max t s.t. t <= x_i <= 1 - t,
/// Ax = d. Returns (point, margin); margin < 0 means X is empty.
pub fn ground_interior_point(
    ground: &PolyhedralGround,
    settings: &SolverSettings,
) -> Result<(Vec<f64>, f64), CertError> {
    let n = ground.n;
    let p = ground.p();
    let mut pb = ProgramBuilder::new();
    let x = pb.free_vars("x", n);
    let t = pb.free_var("t");
    let s1 = pb.nonneg_vars("s1", n);
    let s2 = pb.nonneg_vars("s2", n);
    for i in 0..n {
        let mut row = LinExpr::var(x[i]);
        row.add_var(t, -1.0);
        row.add_var(s1[i], -1.0);
        pb.eq_zero(row, format!("lo[{i}]"));
        let mut row = LinExpr::var(x[i]);
        row.add_var(t, 1.0);
        row.add_var(s2[i], 1.0);
        row.constant -= 1.0;
        pb.eq_zero(row, format!("hi[{i}]"));
    }
    for j in 0..p {
        let mut row = LinExpr::constant(-ground.d[j]);
        for i in 0..n {
            row.add_var(x[i], ground.a[(j, i)]);
        }
        pb.eq_zero(row, format!("eq[{j}]"));
    }
    pb.set_objective(vec![(t, -1.0)]);
    let built = pb.build();
    let sol = solve(&built.program, settings);
    match sol.status {
        Status::Optimal => {
            let margin = -sol.obj;
            if margin < -1e-9 {
                return Err(CertError::EmptyGroundSet);
            }
            let pt: Vec<f64> = x
                .iter()
                .map(|&v| built.var_value(&sol.x, v).clamp(0.0, 1.0))
                .collect();
            Ok((pt, margin))
        }
        Status::PrimalInfeasible => Err(CertError::EmptyGroundSet),
        st => Err(CertError::Solver(st)),
    }
}

/// Orthonormal basis of the null space of A (all of R^n when p = 0).
fn null_basis(ground: &PolyhedralGround) -> DMatrix<f64> {
    let n = ground.n;
    let p = ground.p();
    if p == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = ground.a.clone().svd(false, true);
    let vt = svd.v_t.expect("svd");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = 1e-10 * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    // rows rank..n of vt (padded internally to n rows only when p >= n);
    // for p < n nalgebra returns vt with min(p, n) rows, so complete the
    // basis by projecting coordinate vectors
    let mut basis_cols: Vec<DVector<f64>> = Vec::new();
    let proj = |v: &DVector<f64>, basis: &[DVector<f64>]| -> DVector<f64> {
        let mut out = v.clone();
        for b in basis {
            let dot = b.dot(&out);
            out -= b * dot;
        }
        out
    };
    // start from rows of vt beyond the rank (exact null directions)
    for r in rank..vt.nrows() {
        let v = vt.row(r).transpose();
        basis_cols.push(v.normalize());
    }
    // complete with projected unit vectors
    let row_space: Vec<DVector<f64>> = (0..rank).map(|r| vt.row(r).transpose()).collect();
    for k in 0..n {
        if basis_cols.len() == n - rank {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        let v = proj(&v, &row_space);
        let v = proj(&v, &basis_cols);
        if v.norm() > 1e-8 {
            basis_cols.push(v.normalize());
        }
    }
    let cols = basis_cols.len();
    DMatrix::from_fn(n, cols, |i, j| basis_cols[j][i])
}

/// True when x satisfies every cut x'Sx <= u_omega Diag(S)' diag(u)^{-1} x,
/// i.e. xx' <= u_omega diag(x_i / u_i).
pub fn cut_set_member(x: &[f64], cut: &CutSpec) -> bool {
    let n = x.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -x[i] * x[j];
        }
        m[(i, i)] += cut.u_omega * x[i] / cut.u[i];
    }
    let emin = m
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    emin >= -1e-9
}

/// Deterministic samples of a ground set.
pub fn sample_ground(ground: &GroundSet, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match ground {
        GroundSet::Reals { n } => (0..count)
            .map(|_| (0..*n).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect(),
        GroundSet::Orthant { n } => (0..count)
            .map(|_| (0..*n).map(|_| rng.gen_range(0.0..2.0)).collect())
            .collect(),
        GroundSet::X(g) => sample_x(g, count, &mut rng),
        GroundSet::Level(level) => sample_level(level, count, &mut rng),
        GroundSet::Intersection { x, levels } => {
            filter_samples(x, levels, None, count, &mut rng)
        }
        GroundSet::CutSet { x, levels, cut } => {
            filter_samples(x, levels, Some(cut), count, &mut rng)
        }
    }
}

/// Hit-and-run samples of X starting from the max-margin interior point;
/// equality constraints hold exactly (steps stay in the null space of A).
fn sample_x(ground: &PolyhedralGround, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = ground.n;
    let settings = SolverSettings::default();
    let x0 = match ground_interior_point(ground, &settings) {
        Ok((pt, _)) => pt,
        Err(_) => return Vec::new(),
    };
    let basis = null_basis(ground);
    let m = basis.ncols();
    if m == 0 {
        return vec![x0];
    }
    let mut out = Vec::with_capacity(count);
    let mut cur = DVector::from_column_slice(&x0);
    for _ in 0..count {
        for _step in 0..3 {
            let coeffs: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut dir = DVector::zeros(n);
            for (j, &cj) in coeffs.iter().enumerate() {
                dir += basis.column(j) * cj;
            }
            let dn = dir.norm();
            if dn < 1e-12 {
                continue;
            }
            dir /= dn;
            let mut t_lo = f64::NEG_INFINITY;
            let mut t_hi = f64::INFINITY;
            for i in 0..n {
                let di = dir[i];
                if di.abs() < 1e-14 {
                    continue;
                }
                let a = -cur[i] / di;
                let b = (1.0 - cur[i]) / di;
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                t_lo = t_lo.max(lo);
                t_hi = t_hi.min(hi);
            }
            if !t_lo.is_finite() || !t_hi.is_finite() || t_hi - t_lo < 1e-12 {
                continue;
            }
            let t = rng.gen_range(t_lo..t_hi);
            cur += dir * t;
            for i in 0..n {
                cur[i] = cur[i].clamp(0.0, 1.0);
            }
        }
        out.push(cur.iter().cloned().collect());
    }
    out
}

fn filter_samples(
    x: &PolyhedralGround,
    levels: &[ConvexLevelSet],
    cut: Option<&CutSpec>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let candidates = sample_x(x, count * 20, rng);
    let mut out = Vec::new();
    for cand in candidates {
        if out.len() == count {
            break;
        }
        let in_levels = levels
            .iter()
            .all(|l| l.constraint_fn().eval(&cand) <= 1e-10);
        if !in_levels {
            continue;
        }
        if let Some(cs) = cut {
            if !cut_set_member(&cand, cs) {
                continue;
            }
        }
        out.push(cand);
    }
    out
}

fn sample_level(level: &ConvexLevelSet, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = level.q.order();
    let center = level.slater_point().unwrap_or_else(|_| vec![0.0; n]);
    let f = level.constraint_fn();
    let mut out = Vec::new();
    for _ in 0..count {
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // largest step keeping g(center + t dir) <= 0: quadratic in t
        let qd = level.q.quad_form(&dir);
        let qc = level.q.mul_vec(&center);
        let lin: f64 = dir
            .iter()
            .enumerate()
            .map(|(i, &di)| di * (2.0 * qc[i] + 2.0 * level.c[i]))
            .sum();
        let g0 = f.eval(&center);
        // qd t^2 + lin t + g0 <= 0
        let tmax = if qd.abs() < 1e-14 {
            if lin > 1e-14 {
                -g0 / lin
            } else {
                5.0
            }
        } else {
            let disc = lin * lin - 4.0 * qd * g0;
            if disc <= 0.0 {
                0.0
            } else {
                (-lin + disc.sqrt()) / (2.0 * qd)
            }
        };
        let t = rng.gen_range(0.0..tmax.clamp(1e-9, 5.0));
        out.push(
            center
                .iter()
                .zip(&dir)
                .map(|(&ci, &di)| ci + t * di)
                .collect(),
        );
    }
    out
}

// ---------------------------------------------------------------------------
// verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct BlockCheck {
    pub name: String,
    /// min entry (nonneg) or min eigenvalue (psd)
    pub min_value: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertReport {
    pub name: String,
    pub blocks: Vec<BlockCheck>,
    pub max_coupling_residual: f64,
    pub sample_min: f64,
    pub samples: usize,
    pub pass: bool,
}

pub const PSD_TOL: f64 = 1e-7;
pub const NONNEG_TOL: f64 = 1e-9;
pub const COUPLING_TOL: f64 = 1e-7;
pub const SAMPLE_TOL: f64 = 1e-6;

/// Checks one certificate of a solved program: cone membership, coupling
/// rows, and sampled nonnegativity. Reports, never fails.
pub fn verify_certificate(
    built: &BuiltProgram,
    x: &[f64],
    record: &CertRecord,
    samples: usize,
    seed: u64,
) -> CertReport {
    let mut blocks = Vec::new();
    let mut pass = true;
    for b in &record.blocks {
        let (name, min_value, ok) = match b {
            BlockRef::NonNeg { name, ids } => {
                let mv = ids
                    .iter()
                    .map(|&v| built.var_value(x, v))
                    .fold(f64::INFINITY, f64::min);
                (name.clone(), mv, mv >= -NONNEG_TOL)
            }
            BlockRef::Psd { name, var } => {
                let ids = var.svec_ids();
                let vals: Vec<f64> = ids.map(|id| built.var_value(x, VarId(id))).collect();
                let m = smat(&vals, var.order);
                let scale = 1.0 + m.amax();
                let emin = m
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                (name.clone(), emin, emin >= -PSD_TOL * scale)
            }
        };
        pass &= ok;
        blocks.push(BlockCheck {
            name,
            min_value,
            ok,
        });
    }

    let mut max_coupling = 0.0f64;
    for &r in &record.rows {
        let mut lhs = 0.0;
        for cidx in 0..built.program.num_vars() {
            lhs += built.program.a[(r, cidx)] * x[cidx];
        }
        max_coupling = max_coupling.max((lhs - built.program.b[r]).abs());
    }
    pass &= max_coupling <= COUPLING_TOL;

    let pts = sample_ground(&record.ground, samples, seed);
    let mut sample_min = f64::INFINITY;
    match &record.certified {
        CertifiedFn::Affine { f, g } => {
            let fv: Vec<f64> = f.iter().map(|e| built.value_of(x, e)).collect();
            let gv = built.value_of(x, g);
            for pt in &pts {
                let val = fv.iter().zip(pt).map(|(a, b)| a * b).sum::<f64>() + gv;
                sample_min = sample_min.min(val);
            }
        }
        CertifiedFn::Quadratic(q) => {
            let qf = quad_expr_value(built, x, q);
            for pt in &pts {
                sample_min = sample_min.min(qf.eval(pt));
            }
        }
    }
    if pts.is_empty() {
        sample_min = 0.0;
    }
    pass &= sample_min >= -SAMPLE_TOL;

    CertReport {
        name: record.name.clone(),
        blocks,
        max_coupling_residual: max_coupling,
        sample_min,
        samples: pts.len(),
        pass,
    }
}

/// Materializes a quadratic expression at a solution.
pub fn quad_expr_value(built: &BuiltProgram, x: &[f64], q: &QuadExpr) -> QuadraticFunction {
    let n = q.n;
    let mut qm = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            qm.set(i, j, built.value_of(x, q.q_entry(i, j)));
        }
    }
    QuadraticFunction {
        q: qm,
        c: q.c.iter().map(|e| built.value_of(x, e)).collect(),
        c0: built.value_of(x, &q.c0),
    }
}

/// Materializes an affine certificate at a solution.
pub fn affine_value(built: &BuiltProgram, x: &[f64], f: &[LinExpr], g: &LinExpr) -> AffineFunction {
    AffineFunction {
        f: f.iter().map(|e| built.value_of(x, e)).collect(),
        g: built.value_of(x, g),
    }
}

// ---------------------------------------------------------------------------
// standalone satisfiability (the spec-level operations)
// ---------------------------------------------------------------------------

pub enum CertOutcome {
    Satisfiable(CertReport),
    Unsatisfiable,
}

fn solve_pinned(
    mut pb: ProgramBuilder,
    record: CertRecord,
    settings: &SolverSettings,
    samples: usize,
) -> Result<CertOutcome, CertError> {
    pb.set_objective(Vec::new());
    let built = pb.build();
    let sol = solve(&built.program, settings);
    match sol.status {
        Status::Optimal => Ok(CertOutcome::Satisfiable(verify_certificate(
            &built, &sol.x, &record, samples, 7,
        ))),
        Status::PrimalInfeasible => Ok(CertOutcome::Unsatisfiable),
        st => Err(CertError::Solver(st)),
    }
}

/// Is alpha nonnegative on X? Builds the LP-duality certificate with alpha's
/// coefficients pinned and tests satisfiability.
pub fn affine_nonneg_on_x(
    alpha: &AffineFunction,
    ground: &PolyhedralGround,
    settings: &SolverSettings,
) -> Result<CertOutcome, CertError> {
    ground_interior_point(ground, settings)?;
    let mut pb = ProgramBuilder::new();
    let cert = add_affine_on_x(&mut pb, ground, "alpha");
    let mut rows = Vec::new();
    for (i, fe) in cert.f.iter().enumerate() {
        let mut row = fe.clone();
        row.constant -= alpha.f[i];
        rows.push(pb.eq_zero(row, format!("pin.f[{i}]")));
    }
    let mut row = cert.g.clone();
    row.constant -= alpha.g;
    rows.push(pb.eq_zero(row, "pin.g"));
    let mut record = cert.record;
    record.rows.extend(rows);
    record.certified = CertifiedFn::Affine {
        f: alpha.f.iter().map(|&v| LinExpr::constant(v)).collect(),
        g: LinExpr::constant(alpha.g),
    };
    solve_pinned(pb, record, settings, 200)
}

/// Is alpha nonnegative on the convex level set? Preconditions: Q psd and a
/// Slater point.
pub fn affine_nonneg_on_l(
    alpha: &AffineFunction,
    q: &SymmetricMatrix,
    c: &[f64],
    b: f64,
    settings: &SolverSettings,
) -> Result<CertOutcome, CertError> {
    let level = ConvexLevelSet::new(q.clone(), c.to_vec(), b)?;
    level.slater_point()?;
    let mut pb = ProgramBuilder::new();
    let cert = add_affine_on_level(&mut pb, &level, "alpha");
    let mut rows = Vec::new();
    for (i, fe) in cert.f.iter().enumerate() {
        let mut row = fe.clone();
        row.constant -= alpha.f[i];
        rows.push(pb.eq_zero(row, format!("pin.f[{i}]")));
    }
    // g coupling is an inequality (I.Y + b y0 + t = g with slack t >= 0)
    let mut row = cert.g.clone();
    row.constant -= alpha.g;
    rows.push(pb.eq_zero(row, "pin.g"));
    let mut record = cert.record;
    record.rows.extend(rows);
    record.certified = CertifiedFn::Affine {
        f: alpha.f.iter().map(|&v| LinExpr::constant(v)).collect(),
        g: LinExpr::constant(alpha.g),
    };
    solve_pinned(pb, record, settings, 200)
}

/// Is q (given in matrix-rep convention) a convex quadratic nonnegative
/// on X?
pub fn convex_quad_nonneg_on_x(
    qf: &QuadraticFunction,
    ground: &PolyhedralGround,
    settings: &SolverSettings,
) -> Result<CertOutcome, CertError> {
    ground_interior_point(ground, settings)?;
    let n = ground.n;
    let mut pb = ProgramBuilder::new();
    let cert = add_convex_quad_on_x(&mut pb, ground, "q");
    let mut rows = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut row = cert.quad.q_entry(i, j).clone();
            row.constant -= qf.q.get(i, j);
            rows.push(pb.eq_zero(row, format!("pin.q[{i},{j}]")));
        }
        let mut row = cert.quad.c[i].clone();
        row.constant -= qf.c[i];
        rows.push(pb.eq_zero(row, format!("pin.c[{i}]")));
    }
    let mut row = cert.quad.c0.clone();
    row.constant -= qf.c0;
    rows.push(pb.eq_zero(row, "pin.c0"));
    let mut record = cert.record;
    record.rows.extend(rows);
    let mut pinned = QuadExpr::zero(n);
    pinned.add_known(qf, 1.0);
    record.certified = CertifiedFn::Quadratic(pinned);
    solve_pinned(pb, record, settings, 200)
}

/// Does the cubic function have nonnegative coefficients throughout? Pure
/// coefficient check; the certificate is a single nonneg block.
pub fn cubic_nonneg_coeffs(kappa: &crate::model::CubicFunction) -> (bool, f64) {
    let min = kappa
        .coefficients()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    (min >= -1e-12, min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::expr::LinExpr;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    fn lp_min_over_x(alpha: &AffineFunction, ground: &PolyhedralGround) -> f64 {
        // independent LP route: min f'x + g over X via the conic solver
        let n = ground.n;
        let mut pb = ProgramBuilder::new();
        let x = pb.nonneg_vars("x", n);
        let s = pb.nonneg_vars("s", n);
        for i in 0..n {
            let mut row = LinExpr::var(x[i]);
            row.add_var(s[i], 1.0);
            row.constant -= 1.0;
            pb.eq_zero(row, format!("ub[{i}]"));
        }
        for j in 0..ground.p() {
            let mut row = LinExpr::constant(-ground.d[j]);
            for i in 0..n {
                row.add_var(x[i], ground.a[(j, i)]);
            }
            pb.eq_zero(row, format!("eq[{j}]"));
        }
        pb.set_objective(x.iter().zip(&alpha.f).map(|(&v, &c)| (v, c)).collect());
        let built = pb.build();
        let sol = solve(&built.program, &settings());
        assert_eq!(sol.status, Status::Optimal);
        sol.obj + alpha.g
    }

    #[test]
    fn coordinate_nonneg_on_box() {
        let ground = PolyhedralGround::box_only(3);
        let alpha = AffineFunction {
            f: vec![1.0, 0.0, 0.0],
            g: 0.0,
        };
        match affine_nonneg_on_x(&alpha, &ground, &settings()).unwrap() {
            CertOutcome::Satisfiable(rep) => assert!(rep.pass, "{rep:?}"),
            CertOutcome::Unsatisfiable => panic!("x1 >= 0 on the box"),
        }
    }

    #[test]
    fn negative_constant_unsat_on_box() {
        let ground = PolyhedralGround::box_only(2);
        let alpha = AffineFunction::constant(2, -1.0);
        match affine_nonneg_on_x(&alpha, &ground, &settings()).unwrap() {
            CertOutcome::Satisfiable(_) => panic!("-1 is negative"),
            CertOutcome::Unsatisfiable => {}
        }
    }

    #[test]
    fn equality_identity_on_slice() {
        // 1 - x1 - x2 on {x in [0,1]^2 : x1 + x2 = 1} is identically zero
        let ground = PolyhedralGround {
            n: 2,
            a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            d: DVector::from_vec(vec![1.0]),
        };
        let alpha = AffineFunction {
            f: vec![-1.0, -1.0],
            g: 1.0,
        };
        match affine_nonneg_on_x(&alpha, &ground, &settings()).unwrap() {
            CertOutcome::Satisfiable(rep) => assert!(rep.pass, "{rep:?}"),
            CertOutcome::Unsatisfiable => panic!("identically zero on X"),
        }
    }

    #[test]
    fn affine_on_unit_ball() {
        let q = SymmetricMatrix::identity(2);
        let alpha = AffineFunction {
            f: vec![-1.0, 0.0],
            g: 2.0,
        };
        match affine_nonneg_on_l(&alpha, &q, &[0.0, 0.0], 1.0, &settings()).unwrap() {
            CertOutcome::Satisfiable(rep) => assert!(rep.pass, "{rep:?}"),
            CertOutcome::Unsatisfiable => panic!("2 - x1 >= 1 on the unit ball"),
        }
        let neg = AffineFunction::constant(2, -1.0);
        match affine_nonneg_on_l(&neg, &q, &[0.0, 0.0], 1.0, &settings()).unwrap() {
            CertOutcome::Satisfiable(_) => panic!("-1 is negative"),
            CertOutcome::Unsatisfiable => {}
        }
    }

    #[test]
    fn level_set_requires_psd_and_slater() {
        let mut q = SymmetricMatrix::identity(2);
        q.set(1, 1, -1.0);
        let alpha = AffineFunction::constant(2, 1.0);
        assert!(matches!(
            affine_nonneg_on_l(&alpha, &q, &[0.0, 0.0], 1.0, &settings()),
            Err(CertError::NotPsd)
        ));
        // x'x <= 0 has no interior
        let q = SymmetricMatrix::identity(2);
        assert!(matches!(
            affine_nonneg_on_l(&alpha, &q, &[0.0, 0.0], 0.0, &settings()),
            Err(CertError::NoSlater)
        ));
    }

    #[test]
    fn convex_quad_examples() {
        let ground = PolyhedralGround::box_only(2);
        // x'x: globally psd
        let qf = QuadraticFunction {
            q: SymmetricMatrix::identity(2),
            c: vec![0.0, 0.0],
            c0: 0.0,
        };
        assert!(matches!(
            convex_quad_nonneg_on_x(&qf, &ground, &settings()).unwrap(),
            CertOutcome::Satisfiable(_)
        ));
        // x1^2 - 1 is negative at 0
        let qf = QuadraticFunction {
            q: {
                let mut m = SymmetricMatrix::zeros(2);
                m.set(0, 0, 1.0);
                m
            },
            c: vec![0.0, 0.0],
            c0: -1.0,
        };
        assert!(matches!(
            convex_quad_nonneg_on_x(&qf, &ground, &settings()).unwrap(),
            CertOutcome::Unsatisfiable
        ));
        // (x1 - 1)^2: perfect square
        let qf = QuadraticFunction {
            q: {
                let mut m = SymmetricMatrix::zeros(2);
                m.set(0, 0, 1.0);
                m
            },
            c: vec![-1.0, 0.0],
            c0: 1.0,
        };
        assert!(matches!(
            convex_quad_nonneg_on_x(&qf, &ground, &settings()).unwrap(),
            CertOutcome::Satisfiable(_)
        ));
    }

    #[test]
    fn cubic_coefficient_checks() {
        use crate::model::{CubicFunction, CubicTensor};
        let mut k = CubicFunction::zero(3);
        k.t.add_monomial(0, 1, 2, 1.0);
        assert!(cubic_nonneg_coeffs(&k).0);
        let mut k = CubicFunction::zero(3);
        k.t.add_monomial(0, 0, 0, -1.0);
        assert!(!cubic_nonneg_coeffs(&k).0);
        // (e'x)^3 expanded has positive coefficients everywhere; check the
        // expansion against direct evaluation
        let n = 3;
        let mut t = CubicTensor::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k2 in 0..n {
                    t.add_monomial(i, j, k2, 1.0);
                }
            }
        }
        let cf = CubicFunction {
            t,
            quad: QuadraticFunction::zero(n),
        };
        assert!(cubic_nonneg_coeffs(&cf).0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s: f64 = x.iter().sum();
            let want = s * s * s;
            let got = cf.eval(&x);
            assert!((want - got).abs() <= 1e-10 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn lp_completeness_on_random_affines() {
        // certificate satisfiability agrees with the sign of the LP minimum
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ground = PolyhedralGround {
            n: 3,
            a: DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 1.0]),
            d: DVector::from_vec(vec![1.5]),
        };
        let mut tested = 0;
        for _ in 0..100 {
            let alpha = AffineFunction {
                f: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                g: rng.gen_range(-0.5..1.0),
            };
            let lp_min = lp_min_over_x(&alpha, &ground);
            let outcome = affine_nonneg_on_x(&alpha, &ground, &settings()).unwrap();
            if lp_min >= 0.0 {
                assert!(
                    matches!(outcome, CertOutcome::Satisfiable(_)),
                    "min {lp_min} but unsat"
                );
                tested += 1;
            } else if lp_min < -1e-4 {
                assert!(
                    matches!(outcome, CertOutcome::Unsatisfiable),
                    "min {lp_min} but sat"
                );
                tested += 1;
            }
        }
        assert!(tested > 50, "too few decisive cases: {tested}");
    }

    #[test]
    fn level_cert_agrees_with_oracle_sign() {
        // random convex level sets with Slater points: certificate
        // satisfiability matches the sign of min alpha over L
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 3;
        let mut checked = 0;
        for _ in 0..50 {
            // Q = B'B + small ridge, so psd with Slater interior
            let bmat = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let qd = bmat.transpose() * &bmat + DMatrix::identity(n, n) * 0.1;
            let q = SymmetricMatrix::from_dmatrix(&qd);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let level = match ConvexLevelSet::new(q.clone(), c.clone(), 1.0) {
                Ok(l) => l,
                Err(_) => continue,
            };
            if level.slater_point().is_err() {
                continue;
            }
            let alpha = AffineFunction {
                f: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                g: rng.gen_range(-0.5..1.5),
            };
            // oracle: Q is positive definite here, so the minimum of f'x
            // over L has the closed form -f'Q^{-1}c - rho sqrt(f'Q^{-1}f)
            // with rho^2 = b + c'Q^{-1}c
            let qinv = qd.clone().try_inverse().unwrap();
            let cv = DVector::from_column_slice(&c);
            let fv = DVector::from_column_slice(&alpha.f);
            let rho2 = 1.0 + (cv.transpose() * &qinv * &cv)[(0, 0)];
            let fqf = (fv.transpose() * &qinv * &fv)[(0, 0)];
            let oracle_min = -(fv.transpose() * &qinv * &cv)[(0, 0)]
                - rho2.max(0.0).sqrt() * fqf.max(0.0).sqrt()
                + alpha.g;
            if oracle_min.abs() < 1e-6 {
                continue; // too close to call either way
            }
            match affine_nonneg_on_l(&alpha, &q, &c, 1.0, &settings()).unwrap() {
                CertOutcome::Satisfiable(rep) => {
                    assert!(rep.pass, "{rep:?}");
                    assert!(oracle_min >= 0.0, "cert sat but oracle min {oracle_min}");
                }
                CertOutcome::Unsatisfiable => {
                    assert!(oracle_min < 0.0, "cert unsat but oracle min {oracle_min}");
                }
            }
            checked += 1;
        }
        assert!(checked >= 30, "{checked}");
    }
}
