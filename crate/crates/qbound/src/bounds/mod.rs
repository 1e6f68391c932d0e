//! Bound variants for the QCQP, compiled to conic standard form.
//!
//! Every variant maximizes a scalar `ell` subject to a Lagrangian identity
//!
//! ```text
//! obj(x) - ell + sum_i lam_i(x) g_i(x) + sum_j alpha_j(x) h_j(x)
//!     - sum_i beta_i(x) x_i + sum_i gamma_i(x) (x_i - 1) [+ cut] [- kappa]
//!     in Q+(R^n)   (or nonnegative-coefficient quadratics for the LP bound)
//! ```
//!
//! with multiplier cones that differ per variant: constants (Shor), affine
//! face multipliers certified on X (the quadratic bound), additional face
//! multipliers certified on convex constraint level sets, valid-cut terms,
//! ground sets enlarged to intersections, and quadratic multipliers with a
//! nonnegative-coefficient cubic correction (the cubic bound).

pub mod builder;
pub mod expr;
pub mod stqp;

use std::ops::Range;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::certs::{
    add_affine_on_intersection, add_affine_on_level, add_affine_on_x, add_convex_quad_on_x,
    affine_value, ground_interior_point, quad_expr_value, sample_ground, verify_certificate,
    CertError, CertRecord, CertReport, CertifiedFn, ConvexLevelSet, CutSpec, GroundSet,
    PolyhedralGround,
};
use crate::conic::{solve, Residuals, Solution, SolverSettings, Status};
use crate::model::{
    normalize_box, normalize_objective_shift, AffineFunction, CubicFunction, CubicTensor,
    Instance, QuadraticFunction, SymmetricMatrix,
};

use builder::{BuiltProgram, ProgramBuilder, PsdVar};
use expr::{CubicExpr, LinExpr, QuadExpr, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VariantTag {
    Shor,
    Qb,
    Lpb,
    Soc,
    Cut,
    SocPlus,
    CutPlus,
    Cubic,
}

impl VariantTag {
    pub fn all() -> [VariantTag; 8] {
        [
            VariantTag::Shor,
            VariantTag::Qb,
            VariantTag::Lpb,
            VariantTag::Soc,
            VariantTag::Cut,
            VariantTag::SocPlus,
            VariantTag::CutPlus,
            VariantTag::Cubic,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            VariantTag::Shor => "shor",
            VariantTag::Qb => "qb",
            VariantTag::Lpb => "lp",
            VariantTag::Soc => "soc",
            VariantTag::Cut => "cut",
            VariantTag::SocPlus => "soc+",
            VariantTag::CutPlus => "cut+",
            VariantTag::Cubic => "cubic",
        }
    }

    pub fn parse(s: &str) -> Option<VariantTag> {
        Self::all().into_iter().find(|t| t.name() == s)
    }

    fn uses_cut(&self) -> bool {
        matches!(self, VariantTag::Cut | VariantTag::CutPlus)
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum UOmegaMode {
    Polyhedral,
    Oracle,
    Given(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundVariant {
    pub tag: VariantTag,
    /// cut direction, strictly positive when used; defaults to all ones
    pub u: Option<Vec<f64>>,
    pub u_omega: UOmegaMode,
}

impl BoundVariant {
    pub fn new(tag: VariantTag) -> Self {
        Self {
            tag,
            u: None,
            u_omega: UOmegaMode::Polyhedral,
        }
    }
}

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("u must be strictly positive for cut variants")]
    NonpositiveU,
    #[error("u_omega must be positive (got {0})")]
    NonpositiveUOmega(f64),
    #[error("variant precondition failed: {0}")]
    NoSlaterForVariant(String),
    #[error("certificate construction failed: {0}")]
    Cert(#[from] CertError),
    #[error("conic solver failure: status {0:?}")]
    SolverFailure(Status),
    #[error("instance is infeasible or its polyhedral part is empty")]
    EmptyGroundSet,
    #[error("oracle failure: {0}")]
    Oracle(String),
}

/// One multiplier function of the identity.
#[derive(Debug, Clone, Serialize)]
pub enum Multiplier {
    Scalar(f64),
    Affine(AffineFunction),
    Quadratic(QuadraticFunction),
}

impl Multiplier {
    pub fn as_affine(&self, n: usize) -> AffineFunction {
        match self {
            Multiplier::Scalar(v) => AffineFunction::constant(n, *v),
            Multiplier::Affine(a) => a.clone(),
            Multiplier::Quadratic(_) => panic!("quadratic multiplier in affine position"),
        }
    }
}

/// The dual certificate of a bound: all multipliers in normalized
/// [0,1]^n coordinates, plus the bound value on the normalized objective.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplierSet {
    pub ell: f64,
    pub lambda: Vec<Multiplier>,
    pub alpha: Vec<Multiplier>,
    pub beta: Vec<Multiplier>,
    pub gamma: Vec<Multiplier>,
    /// full cut term x'Sx - u_omega Diag(S)' diag(u)^{-1} x as a quadratic;
    /// the PSD cut matrix S is its quadratic part
    pub cut_term: Option<QuadraticFunction>,
    pub kappa: Option<CubicFunction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub variant: BoundVariant,
    /// lower bound in original-instance objective units
    pub bound: f64,
    pub status: Status,
    pub residuals: Residuals,
    pub iterations: usize,
    pub multipliers: MultiplierSet,
    pub certificates: Vec<CertReport>,
    /// moment pair (X, x) from the dual of the main PSD coupling
    pub moment: Option<MomentPair>,
    pub resolved_u: Option<Vec<f64>>,
    pub resolved_u_omega: Option<f64>,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentPair {
    pub x_mat: SymmetricMatrix,
    pub x_vec: Vec<f64>,
}

/// A solved bound with enough retained structure to re-verify certificates.
pub struct SolvedBound {
    pub report: BoundReport,
    pub built: BuiltProgram,
    pub solution: Solution,
    pub records: Vec<CertRecord>,
}

impl SolvedBound {
    /// Re-runs certificate verification at a given sample count.
    pub fn verify(&self, samples: usize, seed: u64) -> Vec<CertReport> {
        self.records
            .iter()
            .map(|r| verify_certificate(&self.built, &self.solution.x, r, samples, seed))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

/// Everything produced by compiling one bound variant.
pub struct BoundBuild {
    pub built: BuiltProgram,
    records: Vec<CertRecord>,
    ell: VarId,
    lambda: Vec<MultExpr>,
    alpha: Vec<MultExpr>,
    beta: Vec<MultExpr>,
    gamma: Vec<MultExpr>,
    cut_var: Option<(PsdVar, CutSpec)>,
    kappa: Option<KappaExprs>,
    main_rows: Option<Range<usize>>,
}

enum MultExpr {
    Scalar(LinExpr),
    Affine { f: Vec<LinExpr>, g: LinExpr },
    Quadratic(QuadExpr),
}

struct KappaExprs {
    cubic: Vec<LinExpr>,
    quad: QuadExpr,
}

impl BoundBuild {
    pub fn program(&self) -> &crate::conic::ConicProgram {
        &self.built.program
    }
}

/// Convex constraint indices: Q psd (within tolerance) and nonzero.
pub fn convex_constraint_set(inst: &Instance) -> Vec<usize> {
    (0..inst.m())
        .filter(|&i| {
            let q = &inst.q[i + 1];
            !q.is_zero() && crate::model::factorize_psd(q, None).is_ok()
        })
        .collect()
}

fn ground_of(inst: &Instance) -> PolyhedralGround {
    PolyhedralGround {
        n: inst.n,
        a: inst.a.clone(),
        d: inst.d.clone(),
    }
}

fn level_sets(inst: &Instance, mc: &[usize]) -> Result<Vec<ConvexLevelSet>, BoundError> {
    mc.iter()
        .map(|&i| {
            ConvexLevelSet::new(inst.q[i + 1].clone(), inst.c[i + 1].clone(), inst.b[i])
                .map_err(BoundError::from)
        })
        .collect()
}

/// Checks that some X point is strictly interior to every given level set.
fn intersection_slater(
    ground: &PolyhedralGround,
    levels: &[ConvexLevelSet],
    settings: &SolverSettings,
) -> Result<(), BoundError> {
    if levels.is_empty() {
        return Ok(());
    }
    let (x0, _) = ground_interior_point(ground, settings)?;
    let strict = |x: &[f64]| {
        levels
            .iter()
            .map(|l| l.constraint_fn().eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    if strict(&x0) < -1e-6 {
        return Ok(());
    }
    // deterministic interior sampling
    let samples = sample_ground(&GroundSet::X(ground.clone()), 512, 99);
    for s in &samples {
        if strict(s) < -1e-6 {
            return Ok(());
        }
    }
    Err(BoundError::NoSlaterForVariant(
        "no point of X is strictly interior to every convex constraint".into(),
    ))
}

/// Compiles a bound variant for an instance already normalized to [0,1]^n.
pub fn build_bound(
    inst: &Instance,
    variant: &BoundVariant,
    u_omega_value: Option<f64>,
    settings: &SolverSettings,
) -> Result<BoundBuild, BoundError> {
    assert!(inst.is_unit_box(), "build_bound expects a normalized instance");
    let n = inst.n;
    let m = inst.m();
    let p = inst.p();
    let ground = ground_of(inst);
    let tag = variant.tag;

    let mc = convex_constraint_set(inst);
    let needs_levels = matches!(
        tag,
        VariantTag::Soc | VariantTag::Cut | VariantTag::SocPlus | VariantTag::CutPlus
    );
    let levels = if needs_levels {
        let lv = level_sets(inst, &mc)?;
        for (k, l) in lv.iter().enumerate() {
            if l.slater_point().is_err() {
                return Err(BoundError::NoSlaterForVariant(format!(
                    "convex constraint {} has no strict interior",
                    mc[k] + 1
                )));
            }
        }
        lv
    } else {
        Vec::new()
    };
    if matches!(tag, VariantTag::SocPlus | VariantTag::CutPlus) {
        intersection_slater(&ground, &levels, settings)?;
    }

    let cut_spec = if tag.uses_cut() {
        let u = variant.u.clone().unwrap_or_else(|| vec![1.0; n]);
        if u.len() != n || u.iter().any(|&v| v <= 0.0) {
            return Err(BoundError::NonpositiveU);
        }
        let uo = u_omega_value.expect("u_omega must be resolved before build");
        if uo <= 0.0 {
            return Err(BoundError::NonpositiveUOmega(uo));
        }
        Some(CutSpec { u, u_omega: uo })
    } else {
        None
    };

    let mut pb = ProgramBuilder::new();
    let mut records: Vec<CertRecord> = Vec::new();
    let ell = pb.free_var("ell");

    // ---- multipliers -----------------------------------------------------
    let mut lambda: Vec<MultExpr> = Vec::with_capacity(m);
    let mut alpha: Vec<MultExpr> = Vec::with_capacity(p);
    let mut beta: Vec<MultExpr> = Vec::with_capacity(n);
    let mut gamma: Vec<MultExpr> = Vec::with_capacity(n);

    match tag {
        VariantTag::Cubic => {
            for i in 0..m {
                let cert = add_affine_on_x(&mut pb, &ground, &format!("lambda[{}]", i + 1));
                records.push(cert.record);
                lambda.push(MultExpr::Affine {
                    f: cert.f,
                    g: cert.g,
                });
            }
        }
        _ => {
            for i in 0..m {
                let v = pb.nonneg_var(format!("lambda[{}]", i + 1));
                lambda.push(MultExpr::Scalar(LinExpr::var(v)));
            }
        }
    }

    match tag {
        VariantTag::Shor => {
            for j in 0..p {
                let v = pb.free_var(format!("alpha[{}]", j + 1));
                alpha.push(MultExpr::Scalar(LinExpr::var(v)));
            }
        }
        VariantTag::Cubic => {
            for j in 0..p {
                let qv = free_quadratic(&mut pb, n, &format!("alpha[{}]", j + 1));
                alpha.push(MultExpr::Quadratic(qv));
            }
        }
        _ => {
            for j in 0..p {
                let f = pb.free_vars(&format!("alpha[{}].f", j + 1), n);
                let g = pb.free_var(format!("alpha[{}].g", j + 1));
                alpha.push(MultExpr::Affine {
                    f: f.into_iter().map(LinExpr::var).collect(),
                    g: LinExpr::var(g),
                });
            }
        }
    }

    // face multipliers beta_i (for -beta_i x_i) and gamma_i (for
    // +gamma_i (x_i - 1))
    for i in 0..n {
        let (b_mult, g_mult) = match tag {
            VariantTag::Shor => {
                let b = pb.nonneg_var(format!("beta[{}]", i + 1));
                let g = pb.nonneg_var(format!("gamma[{}]", i + 1));
                (
                    MultExpr::Scalar(LinExpr::var(b)),
                    MultExpr::Scalar(LinExpr::var(g)),
                )
            }
            VariantTag::Qb | VariantTag::Lpb => {
                let b = add_affine_on_x(&mut pb, &ground, &format!("beta[{}]", i + 1));
                let g = add_affine_on_x(&mut pb, &ground, &format!("gamma[{}]", i + 1));
                records.push(b.record);
                records.push(g.record);
                (
                    MultExpr::Affine { f: b.f, g: b.g },
                    MultExpr::Affine { f: g.f, g: g.g },
                )
            }
            VariantTag::Soc | VariantTag::Cut => {
                // beta_i = beta_i^X + sum_k beta_ik^{L_k}
                let bx = add_affine_on_x(&mut pb, &ground, &format!("beta[{}]", i + 1));
                let gx = add_affine_on_x(&mut pb, &ground, &format!("gamma[{}]", i + 1));
                records.push(bx.record);
                records.push(gx.record);
                let mut bf = bx.f;
                let mut bg = bx.g;
                let mut gf = gx.f;
                let mut gg = gx.g;
                for (k, level) in levels.iter().enumerate() {
                    let bl = add_affine_on_level(
                        &mut pb,
                        level,
                        &format!("beta[{},L{}]", i + 1, mc[k] + 1),
                    );
                    let gl = add_affine_on_level(
                        &mut pb,
                        level,
                        &format!("gamma[{},L{}]", i + 1, mc[k] + 1),
                    );
                    for (acc, part) in bf.iter_mut().zip(&bl.f) {
                        acc.add_assign(part, 1.0);
                    }
                    bg.add_assign(&bl.g, 1.0);
                    for (acc, part) in gf.iter_mut().zip(&gl.f) {
                        acc.add_assign(part, 1.0);
                    }
                    gg.add_assign(&gl.g, 1.0);
                    records.push(bl.record);
                    records.push(gl.record);
                }
                (
                    MultExpr::Affine { f: bf, g: bg },
                    MultExpr::Affine { f: gf, g: gg },
                )
            }
            VariantTag::SocPlus | VariantTag::CutPlus => {
                let cut_for_faces = if tag == VariantTag::CutPlus {
                    cut_spec.as_ref()
                } else {
                    None
                };
                let b = add_affine_on_intersection(
                    &mut pb,
                    &ground,
                    &levels,
                    cut_for_faces,
                    &format!("beta[{}]", i + 1),
                );
                let g = add_affine_on_intersection(
                    &mut pb,
                    &ground,
                    &levels,
                    cut_for_faces,
                    &format!("gamma[{}]", i + 1),
                );
                records.push(b.record);
                records.push(g.record);
                (
                    MultExpr::Affine { f: b.f, g: b.g },
                    MultExpr::Affine { f: g.f, g: g.g },
                )
            }
            VariantTag::Cubic => {
                let b = add_convex_quad_on_x(&mut pb, &ground, &format!("beta[{}]", i + 1));
                let g = add_convex_quad_on_x(&mut pb, &ground, &format!("gamma[{}]", i + 1));
                records.push(b.record);
                records.push(g.record);
                (MultExpr::Quadratic(b.quad), MultExpr::Quadratic(g.quad))
            }
        };
        beta.push(b_mult);
        gamma.push(g_mult);
    }

    let cut_var = cut_spec.as_ref().map(|cs| (pb.psd_var("S", n), cs.clone()));

    // ---- assemble the identity -------------------------------------------
    let mut ident = CubicExpr::zero(n);
    ident.quad.add_known(&inst.objective_fn(), 1.0);
    ident.quad.c0.add_var(ell, -1.0);

    for (i, lam) in lambda.iter().enumerate() {
        let gi = inst.constraint_fn(i);
        match lam {
            MultExpr::Scalar(e) => ident.quad.add_known_times_expr(&gi, e),
            MultExpr::Affine { f, g } => {
                ident.add_var_affine_times_known_quad(f, g, &gi, 1.0);
            }
            MultExpr::Quadratic(_) => unreachable!(),
        }
    }
    for (j, al) in alpha.iter().enumerate() {
        let w: Vec<f64> = (0..n).map(|i| inst.a[(j, i)]).collect();
        let w0 = -inst.d[j];
        match al {
            MultExpr::Scalar(e) => {
                // constant alpha times affine h_j
                let f = vec![LinExpr::zero(); n];
                let mut q = QuadExpr::zero(n);
                q.add_affine_times_known_affine(&f, e, &w, w0, 1.0);
                ident.quad.add_assign(&q, 1.0);
            }
            MultExpr::Affine { f, g } => {
                let mut q = QuadExpr::zero(n);
                q.add_affine_times_known_affine(f, g, &w, w0, 1.0);
                ident.quad.add_assign(&q, 1.0);
            }
            MultExpr::Quadratic(qv) => {
                ident.add_var_quad_times_known_affine(qv, &w, w0, 1.0);
            }
        }
    }
    for i in 0..n {
        // -beta_i(x) * x_i
        let mut e_i = vec![0.0; n];
        e_i[i] = 1.0;
        match &beta[i] {
            MultExpr::Scalar(e) => {
                let f = vec![LinExpr::zero(); n];
                let mut q = QuadExpr::zero(n);
                q.add_affine_times_known_affine(&f, e, &e_i, 0.0, -1.0);
                ident.quad.add_assign(&q, 1.0);
            }
            MultExpr::Affine { f, g } => {
                let mut q = QuadExpr::zero(n);
                q.add_affine_times_known_affine(f, g, &e_i, 0.0, -1.0);
                ident.quad.add_assign(&q, 1.0);
            }
            MultExpr::Quadratic(qv) => {
                ident.add_var_quad_times_known_affine(qv, &e_i, 0.0, -1.0);
            }
        }
        // +gamma_i(x) * (x_i - 1)
        match &gamma[i] {
            MultExpr::Scalar(e) => {
                let f = vec![LinExpr::zero(); n];
                let mut q = QuadExpr::zero(n);
                q.add_affine_times_known_affine(&f, e, &e_i, -1.0, 1.0);
                ident.quad.add_assign(&q, 1.0);
            }
            MultExpr::Affine { f, g } => {
                let mut q = QuadExpr::zero(n);
                q.add_affine_times_known_affine(f, g, &e_i, -1.0, 1.0);
                ident.quad.add_assign(&q, 1.0);
            }
            MultExpr::Quadratic(qv) => {
                ident.add_var_quad_times_known_affine(qv, &e_i, -1.0, 1.0);
            }
        }
    }
    if let Some((s, cs)) = &cut_var {
        for i in 0..n {
            for j in i..n {
                ident
                    .quad
                    .q_entry_mut(i, j)
                    .add_assign(&s.entry(i, j), 1.0);
            }
            ident.quad.c[i].add_assign(&s.entry(i, i), -0.5 * cs.u_omega / cs.u[i]);
        }
    }

    // ---- cubic-degree handling and the residual cone ----------------------
    let mut kappa = None;
    let mut main_rows = None;
    match tag {
        VariantTag::Lpb => {
            // residual must have nonnegative coefficients: one nonneg slack
            // per matrix-rep entry
            let mut slacks = Vec::new();
            let start = pb.len_rows();
            for i in 0..n {
                for j in i..n {
                    let slack = pb.nonneg_var(format!("resid.q[{i},{j}]"));
                    let mut row = ident.quad.q_entry(i, j).clone();
                    row.add_var(slack, -1.0);
                    pb.eq_zero(row, format!("residual.q[{i},{j}]"));
                    slacks.push(slack);
                }
                let slack = pb.nonneg_var(format!("resid.c[{i}]"));
                let mut row = ident.quad.c[i].clone();
                row.add_var(slack, -1.0);
                pb.eq_zero(row, format!("residual.c[{i}]"));
                slacks.push(slack);
            }
            let slack = pb.nonneg_var("resid.c0");
            let mut row = ident.quad.c0.clone();
            row.add_var(slack, -1.0);
            pb.eq_zero(row, "residual.c0");
            slacks.push(slack);
            let rows: Vec<usize> = (start..pb.len_rows()).collect();
            records.push(CertRecord {
                name: "residual".into(),
                ground: GroundSet::Orthant { n },
                blocks: vec![crate::certs::BlockRef::NonNeg {
                    name: "residual.coefficients".into(),
                    ids: slacks,
                }],
                rows,
                certified: CertifiedFn::Quadratic(ident.quad.clone()),
            });
        }
        VariantTag::Cubic => {
            // cubic coefficients of the identity must match kappa's tensor
            // entries, which are themselves nonnegative
            let k3 = pb.nonneg_vars("kappa.t", ident.t.len());
            let start = pb.len_rows();
            for (idx, coeff) in ident.t.iter().enumerate() {
                let mut row = coeff.clone();
                row.add_var(k3[idx], -1.0);
                pb.eq_zero(row, format!("cubic-cancel[{idx}]"));
            }
            let cancel_rows: Vec<usize> = (start..pb.len_rows()).collect();
            // kappa's lower-degree parts subtract from the residual
            let kq = pb.nonneg_vars("kappa.q", n * (n + 1) / 2);
            let kc = pb.nonneg_vars("kappa.c", n);
            let k0 = pb.nonneg_var("kappa.c0");
            let mut kq_expr = QuadExpr::zero(n);
            let mut slot = 0;
            for i in 0..n {
                for j in i..n {
                    // stored kappa coefficients are monomial coefficients;
                    // matrix entries of the quadratic part are q_ii = t_ii,
                    // q_ij = t_ij / 2
                    let scale = if i == j { 1.0 } else { 0.5 };
                    *kq_expr.q_entry_mut(i, j) = LinExpr::scaled_var(kq[slot], scale);
                    slot += 1;
                }
                kq_expr.c[i] = LinExpr::scaled_var(kc[i], 0.5);
            }
            kq_expr.c0 = LinExpr::var(k0);
            ident.quad.add_assign(&kq_expr, -1.0);

            let mut nn_ids = k3.clone();
            nn_ids.extend(kq.iter());
            nn_ids.extend(kc.iter());
            nn_ids.push(k0);
            let kappa_cubic: Vec<LinExpr> = k3.iter().map(|&v| LinExpr::var(v)).collect();
            records.push(CertRecord {
                name: "kappa".into(),
                ground: GroundSet::Orthant { n },
                blocks: vec![crate::certs::BlockRef::NonNeg {
                    name: "kappa.coefficients".into(),
                    ids: nn_ids,
                }],
                rows: cancel_rows,
                certified: CertifiedFn::Quadratic(kq_expr.clone()),
            });
            kappa = Some(KappaExprs {
                cubic: kappa_cubic,
                quad: kq_expr,
            });

            let z = pb.psd_var("M(residual)", n + 1);
            let rows = pb.couple_psd_to_matrix_rep(&z, &ident.quad, "residual");
            records.push(CertRecord {
                name: "residual".into(),
                ground: GroundSet::Reals { n },
                blocks: vec![crate::certs::BlockRef::Psd {
                    name: "M(residual)".into(),
                    var: z,
                }],
                rows: rows.clone().collect(),
                certified: CertifiedFn::Quadratic(ident.quad.clone()),
            });
            main_rows = Some(rows);
        }
        _ => {
            let z = pb.psd_var("M(residual)", n + 1);
            let rows = pb.couple_psd_to_matrix_rep(&z, &ident.quad, "residual");
            records.push(CertRecord {
                name: "residual".into(),
                ground: GroundSet::Reals { n },
                blocks: vec![crate::certs::BlockRef::Psd {
                    name: "M(residual)".into(),
                    var: z,
                }],
                rows: rows.clone().collect(),
                certified: CertifiedFn::Quadratic(ident.quad.clone()),
            });
            main_rows = Some(rows);
        }
    }

    // lambda >= 0 scalars get a certificate record for uniform verification
    if !matches!(tag, VariantTag::Cubic) {
        let ids: Vec<VarId> = lambda
            .iter()
            .map(|l| match l {
                MultExpr::Scalar(e) => e.terms[0].0,
                _ => unreachable!(),
            })
            .collect();
        if !ids.is_empty() {
            records.push(CertRecord {
                name: "lambda".into(),
                ground: GroundSet::Orthant { n: ids.len() },
                blocks: vec![crate::certs::BlockRef::NonNeg {
                    name: "lambda".into(),
                    ids,
                }],
                rows: Vec::new(),
                certified: CertifiedFn::Affine {
                    f: Vec::new(),
                    g: LinExpr::constant(0.0),
                },
            });
        }
    }

    pb.set_objective(vec![(ell, -1.0)]);
    let built = pb.build();
    Ok(BoundBuild {
        built,
        records,
        ell,
        lambda,
        alpha,
        beta,
        gamma,
        cut_var,
        kappa,
        main_rows,
    })
}

pub(crate) fn free_quadratic(pb: &mut ProgramBuilder, n: usize, tag: &str) -> QuadExpr {
    let mut q = QuadExpr::zero(n);
    for i in 0..n {
        for j in i..n {
            let v = pb.free_var(format!("{tag}.q[{i},{j}]"));
            *q.q_entry_mut(i, j) = LinExpr::var(v);
        }
        let v = pb.free_var(format!("{tag}.c[{i}]"));
        q.c[i] = LinExpr::var(v);
    }
    let v = pb.free_var(format!("{tag}.c0"));
    q.c0 = LinExpr::var(v);
    q
}

// ---------------------------------------------------------------------------
// u_omega
// ---------------------------------------------------------------------------

/// Upper bound on max u'x over the feasible set, per the selected mode.
pub fn compute_u_omega(
    inst: &Instance,
    u: &[f64],
    mode: &UOmegaMode,
    settings: &SolverSettings,
) -> Result<f64, BoundError> {
    if u.len() != inst.n || u.iter().any(|&v| v <= 0.0) {
        return Err(BoundError::NonpositiveU);
    }
    let value = match mode {
        UOmegaMode::Given(v) => *v,
        UOmegaMode::Polyhedral => {
            // LP: max u'x over X (valid since F lies inside X)
            let n = inst.n;
            let mut pb = ProgramBuilder::new();
            let x = pb.nonneg_vars("x", n);
            let s = pb.nonneg_vars("s", n);
            for i in 0..n {
                let mut row = LinExpr::var(x[i]);
                row.add_var(s[i], 1.0);
                row.constant -= 1.0;
                pb.eq_zero(row, format!("ub[{i}]"));
            }
            for j in 0..inst.p() {
                let mut row = LinExpr::constant(-inst.d[j]);
                for i in 0..n {
                    row.add_var(x[i], inst.a[(j, i)]);
                }
                pb.eq_zero(row, format!("eq[{j}]"));
            }
            pb.set_objective(x.iter().zip(u).map(|(&v, &c)| (v, -c)).collect());
            let built = pb.build();
            let sol = solve(&built.program, settings);
            match sol.status {
                Status::Optimal => -sol.obj,
                Status::PrimalInfeasible => return Err(BoundError::EmptyGroundSet),
                st => return Err(BoundError::SolverFailure(st)),
            }
        }
        UOmegaMode::Oracle => {
            // global maximum of u'x over the feasible set
            let mut max_inst = inst.clone();
            max_inst.q[0] = SymmetricMatrix::zeros(inst.n);
            max_inst.c[0] = u.iter().map(|&v| -0.5 * v).collect();
            let opts = crate::oracle::OracleOptions::default();
            let out = crate::oracle::global_minimize(&max_inst, &opts)
                .map_err(|e| BoundError::Oracle(e.to_string()))?;
            -out.value
        }
    };
    if value <= 0.0 {
        return Err(BoundError::NonpositiveUOmega(value));
    }
    Ok(value)
}

// ---------------------------------------------------------------------------
// solve + extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BoundSettings {
    pub solver: SolverSettings,
    /// samples per certificate in the post-solve verification pass
    pub verify_samples: usize,
    pub verify_seed: u64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            verify_samples: 200,
            verify_seed: 7,
        }
    }
}

fn mult_value(built: &BuiltProgram, x: &[f64], m: &MultExpr) -> Multiplier {
    match m {
        MultExpr::Scalar(e) => Multiplier::Scalar(built.value_of(x, e)),
        MultExpr::Affine { f, g } => Multiplier::Affine(affine_value(built, x, f, g)),
        MultExpr::Quadratic(q) => Multiplier::Quadratic(quad_expr_value(built, x, q)),
    }
}

/// Solves a bound variant on an arbitrary-box instance. The reported bound
/// refers to the original objective (the normalization shift is added back).
pub fn solve_bound(
    inst: &Instance,
    variant: &BoundVariant,
    settings: &BoundSettings,
) -> Result<SolvedBound, BoundError> {
    let shift = normalize_objective_shift(inst);
    let (norm, _map) = normalize_box(inst);

    let u_omega_value = if variant.tag.uses_cut() {
        let u = variant.u.clone().unwrap_or_else(|| vec![1.0; norm.n]);
        Some(compute_u_omega(&norm, &u, &variant.u_omega, &settings.solver)?)
    } else {
        None
    };

    let t0 = Instant::now();
    let build = build_bound(&norm, variant, u_omega_value, &settings.solver)?;
    let sol = solve(&build.built.program, &settings.solver);
    let seconds = t0.elapsed().as_secs_f64();
    match sol.status {
        Status::Optimal => {}
        st => return Err(BoundError::SolverFailure(st)),
    }

    let n = norm.n;
    let x = &sol.x;
    let ell = build.built.var_value(x, build.ell);
    let multipliers = MultiplierSet {
        ell,
        lambda: build
            .lambda
            .iter()
            .map(|mv| mult_value(&build.built, x, mv))
            .collect(),
        alpha: build
            .alpha
            .iter()
            .map(|mv| mult_value(&build.built, x, mv))
            .collect(),
        beta: build
            .beta
            .iter()
            .map(|mv| mult_value(&build.built, x, mv))
            .collect(),
        gamma: build
            .gamma
            .iter()
            .map(|mv| mult_value(&build.built, x, mv))
            .collect(),
        cut_term: build.cut_var.as_ref().map(|(s, cs)| {
            let mut mat = SymmetricMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    mat.set(i, j, build.built.value_of(x, &s.entry(i, j)));
                }
            }
            let c = (0..n)
                .map(|i| -0.5 * cs.u_omega * mat.get(i, i) / cs.u[i])
                .collect();
            QuadraticFunction { q: mat, c, c0: 0.0 }
        }),
        kappa: build.kappa.as_ref().map(|k| {
            let mut t = CubicTensor::zeros(n);
            let mut idx = 0;
            for i in 0..n {
                for j in i..n {
                    for kk in j..n {
                        t.add_monomial(i, j, kk, build.built.value_of(x, &k.cubic[idx]));
                        idx += 1;
                    }
                }
            }
            CubicFunction {
                t,
                quad: quad_expr_value(&build.built, x, &k.quad),
            }
        }),
    };

    // moment pair from the duals of the main PSD coupling (quadratic bound)
    let moment = match (variant.tag, &build.main_rows) {
        (VariantTag::Qb, Some(rows)) => {
            let dual: Vec<f64> = rows.clone().map(|r| sol.y[r]).collect();
            let mm = crate::conic::svec::smat(&dual, n + 1);
            let corner = mm[(n, n)];
            let scale = if corner.abs() > 1e-8 { corner } else { 1.0 };
            let mut x_mat = SymmetricMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    x_mat.set(i, j, mm[(i, j)] / scale);
                }
            }
            let x_vec: Vec<f64> = (0..n).map(|i| mm[(i, n)] / scale).collect();
            Some(MomentPair { x_mat, x_vec })
        }
        _ => None,
    };

    let certificates = build
        .records
        .iter()
        .map(|r| {
            verify_certificate(
                &build.built,
                x,
                r,
                settings.verify_samples,
                settings.verify_seed,
            )
        })
        .collect();

    let resolved_u = if variant.tag.uses_cut() {
        Some(variant.u.clone().unwrap_or_else(|| vec![1.0; norm.n]))
    } else {
        None
    };
    let report = BoundReport {
        variant: variant.clone(),
        bound: ell + shift,
        status: sol.status,
        residuals: sol.residuals,
        iterations: sol.iterations,
        multipliers,
        certificates,
        moment,
        resolved_u,
        resolved_u_omega: u_omega_value,
        solve_seconds: seconds,
    };
    Ok(SolvedBound {
        report,
        built: build.built,
        solution: sol,
        records: build.records,
    })
}

// ---------------------------------------------------------------------------
// identity expansion and exactness
// ---------------------------------------------------------------------------

/// Symbolically expands the Lagrangian identity (without kappa) into its
/// degree-3 tensor and degree-<=2 remainder, for a normalized instance.
pub fn expand_identity(ms: &MultiplierSet, inst: &Instance) -> (CubicTensor, QuadraticFunction) {
    let n = inst.n;
    let mut t = CubicTensor::zeros(n);
    let mut rem = QuadraticFunction::zero(n);
    rem.add_scaled(&inst.objective_fn(), 1.0);
    rem.c0 -= ms.ell;

    for (i, lam) in ms.lambda.iter().enumerate() {
        let gi = inst.constraint_fn(i);
        match lam {
            Multiplier::Scalar(v) => rem.add_scaled(&gi, *v),
            Multiplier::Affine(a) => {
                let (ti, ri) = gi.mul_affine(a);
                t.add_scaled(&ti, 1.0);
                rem.add_scaled(&ri, 1.0);
            }
            Multiplier::Quadratic(_) => panic!("lambda cannot be quadratic"),
        }
    }
    for (j, al) in ms.alpha.iter().enumerate() {
        let hj = QuadraticFunction {
            q: SymmetricMatrix::zeros(n),
            c: (0..n).map(|i| 0.5 * inst.a[(j, i)]).collect(),
            c0: -inst.d[j],
        };
        match al {
            Multiplier::Scalar(v) => rem.add_scaled(&hj, *v),
            Multiplier::Affine(a) => {
                let (tj, rj) = hj.mul_affine(a);
                t.add_scaled(&tj, 1.0);
                rem.add_scaled(&rj, 1.0);
            }
            Multiplier::Quadratic(q) => {
                let arow = AffineFunction {
                    f: (0..n).map(|i| inst.a[(j, i)]).collect(),
                    g: -inst.d[j],
                };
                let (tj, rj) = q.mul_affine(&arow);
                t.add_scaled(&tj, 1.0);
                rem.add_scaled(&rj, 1.0);
            }
        }
    }
    for i in 0..n {
        let xi = AffineFunction {
            f: {
                let mut f = vec![0.0; n];
                f[i] = 1.0;
                f
            },
            g: 0.0,
        };
        let xim1 = AffineFunction {
            f: xi.f.clone(),
            g: -1.0,
        };
        let add_product = |mult: &Multiplier,
                           aff: &AffineFunction,
                           sign: f64,
                           t: &mut CubicTensor,
                           rem: &mut QuadraticFunction| {
            match mult {
                Multiplier::Scalar(v) => {
                    // v * (f'x + g): affine, folds into rem
                    for (ci, fi) in rem.c.iter_mut().zip(&aff.f) {
                        *ci += sign * 0.5 * v * fi;
                    }
                    rem.c0 += sign * v * aff.g;
                }
                Multiplier::Affine(a) => {
                    let qa = QuadraticFunction {
                        q: SymmetricMatrix::zeros(aff.f.len()),
                        c: aff.f.iter().map(|v| 0.5 * v).collect(),
                        c0: aff.g,
                    };
                    let (tp, rp) = qa.mul_affine(a);
                    t.add_scaled(&tp, sign);
                    rem.add_scaled(&rp, sign);
                }
                Multiplier::Quadratic(q) => {
                    let (tp, rp) = q.mul_affine(aff);
                    t.add_scaled(&tp, sign);
                    rem.add_scaled(&rp, sign);
                }
            }
        };
        add_product(&ms.beta[i], &xi, -1.0, &mut t, &mut rem);
        add_product(&ms.gamma[i], &xim1, 1.0, &mut t, &mut rem);
    }
    if let Some(cut) = &ms.cut_term {
        rem.add_scaled(cut, 1.0);
    }
    (t, rem)
}

/// Exactness diagnostics for a solved bound at a feasible point.
#[derive(Debug, Clone, Serialize)]
pub struct ExactnessCheck {
    pub exact: bool,
    pub residual_at_point: f64,
    pub gradient_norm: f64,
    pub hessian_min_eig: f64,
    pub objective_gap: f64,
    /// max-abs mismatch between the identity's cubic tensor and kappa's
    pub cubic_cancel_max: Option<f64>,
}

#[derive(Debug, Error)]
pub enum ExactnessError {
    #[error("point is infeasible (max violation {0:.3e})")]
    InfeasiblePoint(f64),
}

/// Verifiable form of "x* attains the bound": the expanded nonnegative
/// residual vanishes to first order at x* and its Hessian part is psd, and
/// the objective value matches the bound.
pub fn check_exactness(
    inst: &Instance,
    report: &BoundReport,
    xstar: &[f64],
) -> Result<ExactnessCheck, ExactnessError> {
    let ev = inst.evaluate(xstar);
    if ev.max_violation() > 1e-6 {
        return Err(ExactnessError::InfeasiblePoint(ev.max_violation()));
    }
    let (norm, map) = normalize_box(inst);
    let y = map.to_normalized(xstar);

    let (tensor, mut rem) = expand_identity(&report.multipliers, &norm);
    let cubic_cancel_max = report.multipliers.kappa.as_ref().map(|kappa| {
        rem.add_scaled(&kappa.quad, -1.0);
        tensor.sub(&kappa.t).max_abs()
    });

    let residual_at_point = rem.eval(&y);
    let grad = rem.gradient(&y);
    let gradient_norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hessian_min_eig = rem.q.min_eigenvalue();
    let objective_gap = ev.objective - report.bound;

    let exact = residual_at_point <= 1e-5
        && gradient_norm <= 1e-5
        && hessian_min_eig >= -1e-7
        && objective_gap <= 1e-4;
    Ok(ExactnessCheck {
        exact,
        residual_at_point,
        gradient_norm,
        hessian_min_eig,
        objective_gap,
        cubic_cancel_max,
    })
}
