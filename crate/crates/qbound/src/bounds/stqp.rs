//! Standard-quadratic-program bounds over the simplex: the cubic-multiplier
//! bound and the first-level SOS cone program, which are equivalent.

use serde::Serialize;

use crate::certs::{add_convex_quad_on_x, PolyhedralGround};
use crate::conic::{solve, Residuals, SolverSettings, Status};
use crate::model::{QuadraticFunction, SymmetricMatrix};

use super::builder::ProgramBuilder;
use super::expr::{CubicExpr, LinExpr, QuadExpr, VarId};
use super::{free_quadratic, BoundError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StqpMethod {
    Bsq,
    Parrilo1,
}

#[derive(Debug, Clone, Serialize)]
pub struct StqpReport {
    pub method: StqpMethod,
    pub bound: f64,
    pub status: Status,
    pub residuals: Residuals,
    pub solve_seconds: f64,
}

/// Lower bound on min x'Qx over the simplex.
pub fn stqp_bound(
    q: &SymmetricMatrix,
    method: StqpMethod,
    settings: &SolverSettings,
) -> Result<StqpReport, BoundError> {
    let t0 = std::time::Instant::now();
    let (bound, status, residuals) = match method {
        StqpMethod::Bsq => bsq(q, settings)?,
        StqpMethod::Parrilo1 => parrilo1(q, settings)?,
    };
    Ok(StqpReport {
        method,
        bound,
        status,
        residuals,
        solve_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// max ell s.t. x'Qx - ell - sum_i alpha_i(x) x_i + alpha_{n+1}(x)(e'x - 1)
/// - kappa(x) is nonnegative on R^n, with alpha_i convex quadratics
/// nonnegative on the simplex, alpha_{n+1} a free quadratic, and kappa a
/// cubic with nonnegative coefficients.
fn bsq(
    q: &SymmetricMatrix,
    settings: &SolverSettings,
) -> Result<(f64, Status, Residuals), BoundError> {
    let n = q.order();
    let ground = PolyhedralGround::simplex(n);
    let mut pb = ProgramBuilder::new();
    let ell = pb.free_var("ell");

    let mut ident = CubicExpr::zero(n);
    ident.quad.add_known(
        &QuadraticFunction {
            q: q.clone(),
            c: vec![0.0; n],
            c0: 0.0,
        },
        1.0,
    );
    ident.quad.c0.add_var(ell, -1.0);

    for i in 0..n {
        let cert = add_convex_quad_on_x(&mut pb, &ground, &format!("alpha[{}]", i + 1));
        let mut e_i = vec![0.0; n];
        e_i[i] = 1.0;
        ident.add_var_quad_times_known_affine(&cert.quad, &e_i, 0.0, -1.0);
    }
    let alpha_last = free_quadratic(&mut pb, n, "alpha[n+1]");
    let ones = vec![1.0; n];
    ident.add_var_quad_times_known_affine(&alpha_last, &ones, -1.0, 1.0);

    // kappa: cubic coefficients equal the identity's (nonneg), lower-degree
    // parts subtract from the residual
    let k3 = pb.nonneg_vars("kappa.t", ident.t.len());
    for (idx, coeff) in ident.t.iter().enumerate() {
        let mut row = coeff.clone();
        row.add_var(k3[idx], -1.0);
        pb.eq_zero(row, format!("cubic-cancel[{idx}]"));
    }
    let kq = pb.nonneg_vars("kappa.q", n * (n + 1) / 2);
    let kc = pb.nonneg_vars("kappa.c", n);
    let k0 = pb.nonneg_var("kappa.c0");
    let mut kq_expr = QuadExpr::zero(n);
    let mut slot = 0;
    for i in 0..n {
        for j in i..n {
            let scale = if i == j { 1.0 } else { 0.5 };
            *kq_expr.q_entry_mut(i, j) = LinExpr::scaled_var(kq[slot], scale);
            slot += 1;
        }
        kq_expr.c[i] = LinExpr::scaled_var(kc[i], 0.5);
    }
    kq_expr.c0 = LinExpr::var(k0);
    ident.quad.add_assign(&kq_expr, -1.0);

    let z = pb.psd_var("M(residual)", n + 1);
    pb.couple_psd_to_matrix_rep(&z, &ident.quad, "residual");

    pb.set_objective(vec![(ell, -1.0)]);
    let built = pb.build();
    let sol = solve(&built.program, settings);
    match sol.status {
        Status::Optimal => Ok((built.var_value(&sol.x, ell), sol.status, sol.residuals)),
        st => Err(BoundError::SolverFailure(st)),
    }
}

/// max ell s.t. Q - ell ee' lies in the first-level SOS cone: there exist
/// symmetric K^(i) with B - K^(i) psd, K^(i)_ii = 0,
/// K^(j)_ii + 2 K^(i)_ij = 0 (i != j), and
/// K^(i)_jk + K^(j)_ik + K^(k)_ij >= 0 for i > j > k.
fn parrilo1(
    q: &SymmetricMatrix,
    settings: &SolverSettings,
) -> Result<(f64, Status, Residuals), BoundError> {
    let n = q.order();
    assert!(n >= 2);
    let mut pb = ProgramBuilder::new();
    let ell = pb.free_var("ell");

    // free entries: K^(i)_{jk} with i not in {j, k}; the rest are derived
    // from the zero-diagonal and cross-diagonal conditions
    let mut free_entries: Vec<Vec<Option<VarId>>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut rows = vec![None; n * (n + 1) / 2];
        let mut slot = 0;
        for j in 0..n {
            for k in j..n {
                if i != j && i != k {
                    rows[slot] = Some(pb.free_var(format!("K[{i}][{j},{k}]")));
                }
                slot += 1;
            }
        }
        free_entries.push(rows);
    }
    let tri = |j: usize, k: usize| crate::model::tri_index(n, j.min(k), j.max(k));
    let k_entry = |i: usize, j: usize, k: usize| -> LinExpr {
        let (j, k) = (j.min(k), j.max(k));
        if i != j && i != k {
            LinExpr::var(free_entries[i][tri(j, k)].unwrap())
        } else if j == k {
            // K^(i)_ii = 0
            debug_assert!(i == j);
            LinExpr::zero()
        } else {
            // i coincides with one index: K^(i)_{i,m} = -K^(m)_{ii} / 2
            let m = if i == j { k } else { j };
            LinExpr::scaled_var(free_entries[m][tri(i, i)].unwrap(), -0.5)
        }
    };

    // B - K^(i) psd with B = Q - ell ee'
    for i in 0..n {
        let z = pb.psd_var(&format!("Z[{i}]"), n);
        for j in 0..n {
            for k in j..n {
                let mut row = LinExpr::constant(q.get(j, k));
                row.add_var(ell, -1.0);
                row.add_assign(&k_entry(i, j, k), -1.0);
                // row equals the (j, k) entry of Z[i]
                row.add_assign(&z.entry(j, k), -1.0);
                if j != k {
                    row.scale(crate::conic::svec::SQRT2);
                }
                pb.eq_zero(row, format!("B-K[{i}][{j},{k}]"));
            }
        }
    }
    // off-triple nonnegativity
    for i in 0..n {
        for j in 0..i {
            for k in 0..j {
                let slack = pb.nonneg_var(format!("triple[{i},{j},{k}]"));
                let mut row = k_entry(i, j, k);
                row.add_assign(&k_entry(j, i, k), 1.0);
                row.add_assign(&k_entry(k, i, j), 1.0);
                row.add_var(slack, -1.0);
                pb.eq_zero(row, format!("triple-row[{i},{j},{k}]"));
            }
        }
    }

    pb.set_objective(vec![(ell, -1.0)]);
    let built = pb.build();
    let sol = solve(&built.program, settings);
    match sol.status {
        Status::Optimal => Ok((built.var_value(&sol.x, ell), sol.status, sol.residuals)),
        st => Err(BoundError::SolverFailure(st)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones_matrix(n: usize) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, 1.0);
            }
        }
        m
    }

    #[test]
    fn all_ones_is_constant_on_simplex() {
        let settings = SolverSettings::default();
        for method in [StqpMethod::Bsq, StqpMethod::Parrilo1] {
            let rep = stqp_bound(&ones_matrix(3), method, &settings).unwrap();
            assert!(
                (rep.bound - 1.0).abs() < 1e-6,
                "{method:?}: {}",
                rep.bound
            );
        }
    }

    #[test]
    fn identity_min_is_one_over_n() {
        let settings = SolverSettings::default();
        for method in [StqpMethod::Bsq, StqpMethod::Parrilo1] {
            let rep = stqp_bound(&SymmetricMatrix::identity(4), method, &settings).unwrap();
            assert!(
                (rep.bound - 0.25).abs() < 1e-6,
                "{method:?}: {}",
                rep.bound
            );
        }
    }
}
