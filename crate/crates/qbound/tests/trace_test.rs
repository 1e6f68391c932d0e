use qbound::conic::{selftest::analytic_corpus, solve, SolverSettings};

#[test]
fn trace_eigmin4() {
    let corpus = analytic_corpus();
    let prob = corpus.iter().find(|p| p.label.contains("eigmin sdp order 4")).unwrap();
    println!("optimum {}", prob.optimum);
    let settings = SolverSettings { trace: true, max_iter: 40, ..Default::default() };
    let sol = solve(&prob.program, &settings);
    println!("status {:?} obj {}", sol.status, sol.obj);
}
