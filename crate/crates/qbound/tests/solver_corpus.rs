//! Solver self-test: the analytic corpus must solve to 1e-7, weak duality
//! must hold on every optimal pair, and recomputed residuals must agree
//! with the solver's report.

use qbound::conic::{residuals, selftest::analytic_corpus, solve, SolverSettings, Status};

#[test]
fn corpus_solves_to_analytic_optima() {
    let settings = SolverSettings {
        debug_checks: true,
        ..Default::default()
    };
    for prob in analytic_corpus() {
        let sol = solve(&prob.program, &settings);
        assert_eq!(sol.status, Status::Optimal, "{} failed: {:?}", prob.label, sol.status);
        let err = (sol.obj - prob.optimum).abs() / (1.0 + prob.optimum.abs());
        assert!(
            err <= 1e-7,
            "{}: got {} want {} (rel err {err:.2e})",
            prob.label,
            sol.obj,
            prob.optimum
        );

        // weak duality: c'x - b'y >= -1e-6 (1 + |c'x|)
        let cx = sol.obj;
        let by: f64 = prob
            .program
            .b
            .iter()
            .zip(&sol.y)
            .map(|(a, b)| a * b)
            .sum();
        assert!(
            cx - by >= -1e-6 * (1.0 + cx.abs()),
            "{}: weak duality violated: {cx} < {by}",
            prob.label
        );

        // recomputed residuals within 10x of reported
        let rec = residuals(&prob.program, &sol);
        assert!(rec.primal <= 10.0 * sol.residuals.primal.max(1e-8));
        assert!(rec.dual <= 10.0 * sol.residuals.dual.max(1e-8));
    }
}

#[test]
fn perturbed_solution_reports_residual() {
    let prob = &analytic_corpus()[0];
    let mut sol = solve(&prob.program, &SolverSettings::default());
    sol.x[0] += 0.1;
    let rec = residuals(&prob.program, &sol);
    let expected = 0.1 / (1.0 + prob.program.b.norm());
    assert!(
        (rec.primal - expected).abs() < 1e-6,
        "primal residual {} vs expected {expected}",
        rec.primal
    );
}
