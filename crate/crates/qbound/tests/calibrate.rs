//! Temporary calibration harness for the bundled n=4 benchmark instance.

use nalgebra::{DMatrix, DVector};
use qbound::bounds::{solve_bound, BoundSettings, BoundVariant, UOmegaMode, VariantTag};
use qbound::model::{Instance, SymmetricMatrix};
use qbound::oracle::{global_minimize, OracleOptions};

fn build(q2: SymmetricMatrix, c2: Vec<f64>, b2: f64, obj_c2: f64) -> Instance {
    let q0 = SymmetricMatrix::from_rows(&[
        vec![-8.0, 7.0, 0.0, 5.0],
        vec![7.0, -1.0, 0.0, 2.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![5.0, 2.0, 0.0, -5.0],
    ])
    .unwrap();
    let q1 = SymmetricMatrix::from_rows(&[
        vec![2.0, 2.0, 0.0, 0.0],
        vec![2.0, 2.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ])
    .unwrap();
    let q3 = SymmetricMatrix::from_rows(&[
        vec![2.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
    .unwrap();
    Instance {
        n: 4,
        q: vec![q0, q1, q2, q3],
        c: vec![
            vec![0.0, obj_c2, 0.0, 0.0],
            vec![4.0, 3.0, 0.0, 0.5],
            c2,
            vec![1.0, 0.0, 0.0, 0.5],
        ],
        b: vec![8.0, b2, 4.0],
        a: DMatrix::from_row_slice(1, 4, &[1.0, 2.0, 2.0, 1.0]),
        d: DVector::from_vec(vec![3.0]),
        l: vec![0.0; 4],
        u: vec![1.0; 4],
    }
}

fn c2_matrix(extra: &str) -> SymmetricMatrix {
    // base: -8x1^2 - 5x2^2 + 2x1x4, plus one extra -5 term per reading
    let mut m = SymmetricMatrix::zeros(4);
    m.set(0, 0, -8.0);
    m.set(1, 1, -5.0);
    m.set(0, 3, 1.0);
    match extra {
        "dup" => m.set(1, 1, -10.0),
        "x3" => m.set(2, 2, -5.0),
        "x4" => m.set(3, 3, -5.0),
        "none" => {}
        _ => unreachable!(),
    }
    m
}

fn candidates() -> Vec<(String, Instance)> {
    let mut out = Vec::new();
    for extra in ["dup", "x3", "x4", "none"] {
        for flip in [false, true] {
            for obj_c2 in [-5.0, -10.0] {
                let mut q2 = c2_matrix(extra);
                let mut c2 = vec![-2.0, 2.0, 0.0, 1.0];
                let mut b2 = -4.0;
                if flip {
                    q2 = q2.scaled(-1.0);
                    for v in c2.iter_mut() {
                        *v = -*v;
                    }
                    b2 = 4.0;
                }
                out.push((
                    format!(
                        "{extra}{}{}",
                        if flip { "/flip" } else { "/lit" },
                        if obj_c2 == -10.0 { "/obj2x" } else { "/obj1x" }
                    ),
                    build(q2, c2, b2, obj_c2),
                ));
            }
        }
    }
    out
}

#[test]
#[ignore]
fn calibrate_candidates() {
    let xstar = [0.4203, 0.4942, 0.7956, 0.0];
    let settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    println!("target: shor -44.0945 qb -15.2676 opt -8.0008");
    for (name, inst) in candidates() {
        let ev = inst.evaluate(&xstar);
        let feas = ev.max_violation() <= 1e-3;
        let shor = solve_bound(&inst, &BoundVariant::new(VariantTag::Shor), &settings)
            .map(|s| s.report.bound);
        let qb = solve_bound(&inst, &BoundVariant::new(VariantTag::Qb), &settings)
            .map(|s| s.report.bound);
        println!(
            "{name:22} obj(x*) {:+8.4} feas {}  shor {}  qb {}",
            ev.objective,
            feas as u8,
            shor.map(|v| format!("{v:+9.4}")).unwrap_or_else(|e| format!("ERR {e}")),
            qb.map(|v| format!("{v:+9.4}")).unwrap_or_else(|e| format!("ERR {e}")),
        );
    }
}

#[test]
#[ignore]
fn oracle_best_candidate() {
    // run the global oracle on promising candidates
    let settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    for (name, inst) in candidates() {
        let shor = match solve_bound(&inst, &BoundVariant::new(VariantTag::Shor), &settings) {
            Ok(s) => s.report.bound,
            Err(_) => continue,
        };
        if (shor + 44.0945).abs() > 1.5 {
            continue;
        }
        let opts = OracleOptions {
            max_nodes: 2000,
            ..Default::default()
        };
        match global_minimize(&inst, &opts) {
            Ok(res) => println!(
                "{name}: shor {shor:+.4} oracle {:+.4} at {:?} ({} nodes)",
                res.value, res.point, res.nodes
            ),
            Err(e) => println!("{name}: shor {shor:+.4} oracle ERR {e}"),
        }
        let mut cut = BoundVariant::new(VariantTag::Cut);
        cut.u = Some(vec![1.0, 2.0, 2.0, 1.0]);
        cut.u_omega = UOmegaMode::Given(3.9145);
        for (tag, variant) in [
            (VariantTag::Qb, BoundVariant::new(VariantTag::Qb)),
            (VariantTag::Soc, BoundVariant::new(VariantTag::Soc)),
            (VariantTag::Cut, cut),
            (VariantTag::Cubic, BoundVariant::new(VariantTag::Cubic)),
        ] {
            match solve_bound(&inst, &variant, &settings) {
                Ok(s) => println!("   {:6} {:+9.4}", tag.name(), s.report.bound),
                Err(e) => println!("   {:6} ERR {e}", tag.name()),
            }
        }
    }
}

fn winner() -> Instance {
    let q2 = c2_matrix("none");
    build(q2, vec![-2.0, 2.0, 0.0, 1.0], -4.0, -10.0)
}

#[test]
#[ignore]
fn full_table_on_winner() {
    let inst = winner();
    let settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    println!("target lb: shor -44.0945 qb -15.2676 soc -13.3647 cut -13.2518 soc+ -13.2294 cut+ -11.8969 cubic -8.0008");
    for tag in VariantTag::all() {
        let mut variant = BoundVariant::new(tag);
        if matches!(tag, VariantTag::Cut | VariantTag::CutPlus) {
            variant.u = Some(vec![1.0, 2.0, 2.0, 1.0]);
            variant.u_omega = UOmegaMode::Given(3.9145);
        }
        match solve_bound(&inst, &variant, &settings) {
            Ok(s) => println!("   {:6} {:+9.4}  ({} iters, {:.2}s)", tag.name(), s.report.bound, s.report.iterations, s.report.solve_seconds),
            Err(e) => println!("   {:6} ERR {e}", tag.name()),
        }
    }
    // Shor with explicit diagonal products x_i^2 <= x_i appended
    let mut aug = inst.clone();
    for i in 0..4 {
        let mut q = SymmetricMatrix::zeros(4);
        q.set(i, i, 1.0);
        aug.q.push(q);
        let mut c = vec![0.0; 4];
        c[i] = -0.5;
        aug.c.push(c);
        aug.b.push(0.0);
    }
    match solve_bound(&aug, &BoundVariant::new(VariantTag::Shor), &settings) {
        Ok(s) => println!("   shor+diag {:+9.4}", s.report.bound),
        Err(e) => println!("   shor+diag ERR {e}"),
    }
    let opts = OracleOptions {
        max_nodes: 4000,
        ..Default::default()
    };
    match global_minimize(&inst, &opts) {
        Ok(res) => println!(
            "   oracle {:+9.4} at {:?} ({} nodes, status {:?})",
            res.value, res.point, res.nodes, res.status
        ),
        Err(e) => println!("   oracle ERR {e}"),
    }
}

#[test]
#[ignore]
fn trace_cubic_winner() {
    let inst = winner();
    let settings = BoundSettings {
        solver: qbound::conic::SolverSettings {
            trace: true,
            max_iter: 100,
            ..Default::default()
        },
        verify_samples: 0,
        ..Default::default()
    };
    match solve_bound(&inst, &BoundVariant::new(VariantTag::Cubic), &settings) {
        Ok(s) => println!("cubic -> {}", s.report.bound),
        Err(e) => println!("cubic -> ERR {e}"),
    }
}

fn build_ineq(q2: SymmetricMatrix, c2: Vec<f64>, b2: f64, obj_c2: f64) -> Instance {
    // linear row as a quadratic constraint with Q = 0:  -(x1+2x2+2x3+x4) <= -3
    let mut inst = build(q2, c2, b2, obj_c2);
    inst.a = DMatrix::zeros(0, 4);
    inst.d = DVector::zeros(0);
    inst.q.push(SymmetricMatrix::zeros(4));
    inst.c.push(vec![-0.5, -1.0, -1.0, -0.5]);
    inst.b.push(-3.0);
    inst
}

#[test]
#[ignore]
fn calibrate_inequality_form() {
    let xstar = [0.4203, 0.4942, 0.7956, 0.0];
    let settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    println!("target: shor -44.0945 qb -15.2676 opt -8.0008 u_omega 3.9145");
    for extra in ["dup", "x3", "x4", "none"] {
        for flip in [false, true] {
            let mut q2 = c2_matrix(extra);
            let mut c2 = vec![-2.0, 2.0, 0.0, 1.0];
            let mut b2 = -4.0;
            if flip {
                q2 = q2.scaled(-1.0);
                for v in c2.iter_mut() {
                    *v = -*v;
                }
                b2 = 4.0;
            }
            let inst = build_ineq(q2, c2, b2, -10.0);
            let name = format!("{extra}{}", if flip { "/flip" } else { "/lit" });
            let ev = inst.evaluate(&xstar);
            let shor = solve_bound(&inst, &BoundVariant::new(VariantTag::Shor), &settings)
                .map(|s| format!("{:+9.4}", s.report.bound))
                .unwrap_or_else(|e| format!("ERR {e}"));
            let qb = solve_bound(&inst, &BoundVariant::new(VariantTag::Qb), &settings)
                .map(|s| format!("{:+9.4}", s.report.bound))
                .unwrap_or_else(|e| format!("ERR {e}"));
            println!(
                "{name:12} obj(x*) {:+8.4} viol {:.2e}  shor {shor}  qb {qb}",
                ev.objective,
                ev.max_violation()
            );
        }
    }
}

#[test]
#[ignore]
fn u_omega_conventions_on_winner() {
    let inst = winner();
    // max u'x over box + quadratic constraints, dropping the equality
    let mut no_eq = inst.clone();
    no_eq.a = DMatrix::zeros(0, 4);
    no_eq.d = DVector::zeros(0);
    let u = [1.0, 2.0, 2.0, 1.0];
    for (label, target) in [("over box+quads", &no_eq), ("over F", &inst)] {
        let mut max_inst = target.clone();
        max_inst.q[0] = SymmetricMatrix::zeros(4);
        max_inst.c[0] = u.iter().map(|&v| -0.5 * v).collect();
        let opts = OracleOptions {
            max_nodes: 3000,
            ..Default::default()
        };
        match global_minimize(&max_inst, &opts) {
            Ok(res) => println!(
                "u_omega {label}: {:.4} (status {:?}, best_bound {:.4})",
                -res.value, res.status, -res.best_bound
            ),
            Err(e) => println!("u_omega {label}: ERR {e}"),
        }
    }
    // true optimum with a bigger budget + grid
    let opts = OracleOptions {
        max_nodes: 20000,
        ..Default::default()
    };
    match global_minimize(&inst, &opts) {
        Ok(res) => println!(
            "optimum: {:.4} at {:?} ({:?}, best_bound {:.4}, {} nodes)",
            res.value, res.point, res.status, res.best_bound, res.nodes
        ),
        Err(e) => println!("optimum ERR {e}"),
    }
    match qbound::oracle::grid_multistart(&inst, 17, 300) {
        Ok((v, pt)) => println!("grid17: {v:.4} at {pt:?}"),
        Err(e) => println!("grid17 ERR {e}"),
    }
}

fn with_diag_products(inst: &Instance) -> Instance {
    let mut aug = inst.clone();
    let n = inst.n;
    for i in 0..n {
        let mut q = SymmetricMatrix::zeros(n);
        q.set(i, i, 1.0);
        aug.q.push(q);
        let mut c = vec![0.0; n];
        c[i] = -0.5;
        aug.c.push(c);
        aug.b.push(0.0);
    }
    aug
}

fn c2_matrix_v2(extra: &str) -> SymmetricMatrix {
    let mut m = SymmetricMatrix::zeros(4);
    m.set(0, 0, -8.0);
    m.set(0, 3, 1.0);
    match extra {
        "dup" => m.set(1, 1, -10.0),
        "x2" => m.set(1, 1, -5.0),
        "x2x3" => {
            m.set(1, 1, -5.0);
            m.set(2, 2, -5.0);
        }
        "x2x4" => {
            m.set(1, 1, -5.0);
            m.set(3, 3, -5.0);
        }
        "x3x4" => {
            m.set(2, 2, -5.0);
            m.set(3, 3, -5.0);
        }
        _ => unreachable!(),
    }
    m
}

#[test]
#[ignore]
fn broad_search() {
    let xstar = [0.4203, 0.4942, 0.7956, 0.0];
    let settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    println!("targets: shor -44.0945 qb -15.2676");
    for extra in ["dup", "x2", "x2x3", "x2x4", "x3x4"] {
        for flip in [false, true] {
            for obj_c2 in [-5.0, -10.0] {
                let mut q2 = c2_matrix_v2(extra);
                let mut c2 = vec![-2.0, 2.0, 0.0, 1.0];
                let mut b2 = -4.0;
                if flip {
                    q2 = q2.scaled(-1.0);
                    for v in c2.iter_mut() {
                        *v = -*v;
                    }
                    b2 = 4.0;
                }
                let inst = build(q2, c2, b2, obj_c2);
                let name = format!(
                    "{extra}{}{}",
                    if flip { "/flip" } else { "/lit" },
                    if obj_c2 == -10.0 { "/2x" } else { "/1x" }
                );
                let ev = inst.evaluate(&xstar);
                let shor = solve_bound(&inst, &BoundVariant::new(VariantTag::Shor), &settings)
                    .map(|s| s.report.bound)
                    .unwrap_or(f64::NAN);
                let shor_diag = solve_bound(
                    &with_diag_products(&inst),
                    &BoundVariant::new(VariantTag::Shor),
                    &settings,
                )
                .map(|s| s.report.bound)
                .unwrap_or(f64::NAN);
                let qb = solve_bound(&inst, &BoundVariant::new(VariantTag::Qb), &settings)
                    .map(|s| s.report.bound)
                    .unwrap_or(f64::NAN);
                println!(
                    "{name:14} viol {:8.2e} shor {shor:+9.4} shor+d {shor_diag:+9.4} qb {qb:+9.4}",
                    ev.max_violation()
                );
            }
        }
    }
}

/// moment-side relaxation with selectable RLT row families
fn moment_relaxation(
    inst: &Instance,
    x_nonneg_rows: bool,
    x_upper_rows: bool,
    xg0: bool,
    ex_minus_x: bool,
    eet: bool,
    xat_dx: bool,
    diag_le_x: bool,
) -> Option<f64> {
    use qbound::bounds::builder::ProgramBuilder;
    use qbound::bounds::expr::LinExpr;
    use qbound::conic::{solve, SolverSettings, Status};
    let n = inst.n;
    let mut pb = ProgramBuilder::new();
    let big = pb.psd_var("M", n + 1); // [[X, x], [x', 1]]
    let one = big.entry(n, n);
    let mut row = one.clone();
    row.constant -= 1.0;
    pb.eq_zero(row, "corner");
    let xent = |i: usize| big.entry(i, n);
    let xx = |i: usize, j: usize| big.entry(i, j);

    // objective: Q0 . X + 2 c0' x  (minimize)
    let mut obj_terms: Vec<(qbound::bounds::expr::VarId, f64)> = Vec::new();
    let mut obj = LinExpr::zero();
    for i in 0..n {
        for j in 0..n {
            obj.add_assign(&xx(i, j), inst.q[0].get(i, j));
        }
        obj.add_assign(&xent(i), 2.0 * inst.c[0][i]);
    }
    obj.compact();
    for &(v, c) in &obj.terms {
        obj_terms.push((v, c));
    }

    // quadratic constraints: Qi . X + 2ci'x <= bi
    for k in 0..inst.m() {
        let mut e = LinExpr::zero();
        for i in 0..n {
            for j in 0..n {
                e.add_assign(&xx(i, j), inst.q[k + 1].get(i, j));
            }
            e.add_assign(&xent(i), 2.0 * inst.c[k + 1][i]);
        }
        e.constant -= inst.b[k];
        let s = pb.nonneg_var(format!("qslack[{k}]"));
        e.add_var(s, 1.0);
        pb.eq_zero(e, format!("qcon[{k}]"));
    }
    // Ax = d
    for r in 0..inst.p() {
        let mut e = LinExpr::zero();
        for i in 0..n {
            e.add_assign(&xent(i), inst.a[(r, i)]);
        }
        e.constant -= inst.d[r];
        pb.eq_zero(e, format!("eq[{r}]"));
    }
    // box rows on x
    if x_nonneg_rows {
        for i in 0..n {
            let s = pb.nonneg_var(format!("xlo[{i}]"));
            let mut e = xent(i);
            e.add_var(s, -1.0);
            pb.eq_zero(e, format!("xlo[{i}]"));
        }
    }
    if x_upper_rows {
        for i in 0..n {
            let s = pb.nonneg_var(format!("xhi[{i}]"));
            let mut e = xent(i);
            e.add_var(s, 1.0);
            e.constant -= 1.0;
            pb.eq_zero(e, format!("xhi[{i}]"));
        }
    }
    if xg0 {
        for i in 0..n {
            for j in i..n {
                let s = pb.nonneg_var(format!("Xg0[{i},{j}]"));
                let mut e = xx(i, j);
                e.add_var(s, -1.0);
                pb.eq_zero(e, format!("Xg0r[{i},{j}]"));
            }
        }
    }
    if ex_minus_x {
        for i in 0..n {
            for j in 0..n {
                let s = pb.nonneg_var(format!("eX[{i},{j}]"));
                let mut e = xent(j);
                e.add_assign(&xx(i, j), -1.0);
                e.add_var(s, -1.0);
                pb.eq_zero(e, format!("eXr[{i},{j}]"));
            }
        }
    }
    if eet {
        for i in 0..n {
            for j in i..n {
                let s = pb.nonneg_var(format!("eet[{i},{j}]"));
                let mut e = xx(i, j);
                e.add_assign(&xent(i), -1.0);
                e.add_assign(&xent(j), -1.0);
                e.constant += 1.0;
                e.add_var(s, -1.0);
                pb.eq_zero(e, format!("eetr[{i},{j}]"));
            }
        }
    }
    if xat_dx {
        for r in 0..inst.p() {
            for i in 0..n {
                let mut e = LinExpr::zero();
                for j in 0..n {
                    e.add_assign(&xx(i, j), inst.a[(r, j)]);
                }
                e.add_assign(&xent(i), -inst.d[r]);
                pb.eq_zero(e, format!("xat[{r},{i}]"));
            }
        }
    }
    if diag_le_x {
        for i in 0..n {
            let s = pb.nonneg_var(format!("dg[{i}]"));
            let mut e = xent(i);
            e.add_assign(&xx(i, i), -1.0);
            e.add_var(s, -1.0);
            pb.eq_zero(e, format!("dgr[{i}]"));
        }
    }
    pb.set_objective(obj_terms);
    let built = pb.build();
    let sol = solve(&built.program, &SolverSettings::default());
    if sol.status == Status::Optimal {
        Some(sol.obj)
    } else {
        None
    }
}

#[test]
#[ignore]
fn scan_moment_relaxations() {
    let inst = winner(); // x2/lit/2x
    println!("target shor -44.0945; qb -15.2676");
    for mask in 0..32u32 {
        let xg0 = mask & 1 != 0;
        let ex = mask & 2 != 0;
        let eet = mask & 4 != 0;
        let xat = mask & 8 != 0;
        let dg = mask & 16 != 0;
        let val = moment_relaxation(&inst, true, true, xg0, ex, eet, xat, dg);
        match val {
            Some(v) => {
                let label = format!(
                    "{}{}{}{}{}",
                    if xg0 { "Xg0 " } else { "" },
                    if ex { "eX " } else { "" },
                    if eet { "eet " } else { "" },
                    if xat { "XAt " } else { "" },
                    if dg { "dgX " } else { "" }
                );
                println!("{label:24} -> {v:+9.4}");
            }
            None => println!("mask {mask:2}: failed"),
        }
    }
}

#[test]
#[ignore]
fn c2_relevance_and_optima() {
    let settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    // instance without constraint 2 at all
    let mut no_c2 = winner();
    no_c2.q.remove(2);
    no_c2.c.remove(2);
    no_c2.b.remove(1);
    let qb = solve_bound(&no_c2, &BoundVariant::new(VariantTag::Qb), &settings)
        .map(|s| s.report.bound)
        .unwrap_or(f64::NAN);
    let shor = solve_bound(&no_c2, &BoundVariant::new(VariantTag::Shor), &settings)
        .map(|s| s.report.bound)
        .unwrap_or(f64::NAN);
    println!("no-c2 instance: shor {shor:+.4} qb {qb:+.4}");

    // optima across x*-feasible c2 readings
    let xstar = [0.4203, 0.4942, 0.7956, 0.0];
    for extra in ["dup", "x2", "x2x3", "x2x4", "x3x4"] {
        for flip in [false, true] {
            let mut q2 = c2_matrix_v2(extra);
            let mut c2 = vec![-2.0, 2.0, 0.0, 1.0];
            let mut b2 = -4.0;
            if flip {
                q2 = q2.scaled(-1.0);
                for v in c2.iter_mut() {
                    *v = -*v;
                }
                b2 = 4.0;
            }
            let inst = build(q2, c2, b2, -10.0);
            if inst.evaluate(&xstar).max_violation() > 1e-3 {
                continue;
            }
            let name = format!("{extra}{}", if flip { "/flip" } else { "/lit" });
            let opts = OracleOptions {
                max_nodes: 3000,
                ..Default::default()
            };
            match global_minimize(&inst, &opts) {
                Ok(res) => println!(
                    "{name:12} optimum {:+9.4} ({:?}, lb {:+9.4}) at {:?}",
                    res.value, res.status, res.best_bound, res.point
                ),
                Err(e) => println!("{name:12} oracle ERR {e}"),
            }
        }
    }
}

#[test]
#[ignore]
fn shor_anchored_sweep() {
    let settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    let xstar = [0.4203, 0.4942, 0.7956, 0.0];
    let mut hits = Vec::new();
    for extra in ["dup", "x2", "x2x3", "x2x4", "x3x4"] {
        for qsign in [1.0, -1.0] {
            for lsign in [1.0, -1.0] {
                for b2 in [-4.0, 4.0] {
                    for obj_c2 in [-5.0, -10.0] {
                        let q2 = c2_matrix_v2(extra).scaled(qsign);
                        let c2: Vec<f64> =
                            [-2.0, 2.0, 0.0, 1.0].iter().map(|v| v * lsign).collect();
                        let inst = build(q2, c2, b2, obj_c2);
                        let shor =
                            solve_bound(&inst, &BoundVariant::new(VariantTag::Shor), &settings)
                                .map(|s| s.report.bound)
                                .unwrap_or(f64::NAN);
                        if (shor + 44.0945).abs() < 0.05 {
                            let qb =
                                solve_bound(&inst, &BoundVariant::new(VariantTag::Qb), &settings)
                                    .map(|s| s.report.bound)
                                    .unwrap_or(f64::NAN);
                            let viol = inst.evaluate(&xstar).max_violation();
                            hits.push(format!(
                                "extra {extra} qsign {qsign} lsign {lsign} b2 {b2} obj {obj_c2}: shor {shor:+.4} qb {qb:+.4} viol {viol:.2e}"
                            ));
                        }
                    }
                }
            }
        }
    }
    if hits.is_empty() {
        println!("no shor hits within 0.05");
    }
    for h in hits {
        println!("HIT {h}");
    }
}
