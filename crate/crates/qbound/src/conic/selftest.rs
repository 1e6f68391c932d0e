//! Generated LP/SDP corpus with known analytic optima, used to self-test
//! the interior-point solver.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::program::{BlockKind, ConicProgram};
use super::svec::{svec, svec_dim};

/// A corpus entry: program, its exact optimal value, and a label.
pub struct CorpusProblem {
    pub program: ConicProgram,
    pub optimum: f64,
    pub label: String,
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// min c'x over the simplex {x >= 0, e'x = 1}; optimum is min_i c_i.
fn simplex_lp(c: Vec<f64>) -> CorpusProblem {
    let n = c.len();
    let optimum = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let program = ConicProgram {
        c: DVector::from_vec(c),
        a: DMatrix::from_element(1, n, 1.0),
        b: DVector::from_vec(vec![1.0]),
        blocks: vec![BlockKind::NonNeg { dim: n }],
        names: names(n),
    };
    CorpusProblem {
        program,
        optimum,
        label: format!("simplex lp n={n}"),
    }
}

/// min c'x over the box [0,1]^n (slack form); optimum is sum of min(c_i, 0).
fn box_lp(c: Vec<f64>) -> CorpusProblem {
    let n = c.len();
    let optimum: f64 = c.iter().map(|v| v.min(0.0)).sum();
    let mut cc = c.clone();
    cc.extend(vec![0.0; n]);
    let mut a = DMatrix::zeros(n, 2 * n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        a[(i, n + i)] = 1.0;
    }
    let program = ConicProgram {
        c: DVector::from_vec(cc),
        a,
        b: DVector::from_element(n, 1.0),
        blocks: vec![BlockKind::NonNeg { dim: 2 * n }],
        names: names(2 * n),
    };
    CorpusProblem {
        program,
        optimum,
        label: format!("box lp n={n}"),
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// min t s.t. tI - C psd; optimum is the largest eigenvalue of C.
fn eigmax_sdp(c_mat: DMatrix<f64>, label: &str) -> CorpusProblem {
    let n = c_mat.nrows();
    let d = svec_dim(n);
    let lam_max = c_mat
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    // variables: t (free), Z (psd); rows: svec(tI) - Z = svec(C)
    let mut a = DMatrix::zeros(d, 1 + d);
    let eye = svec(&DMatrix::identity(n, n));
    for (r, &ev) in eye.iter().enumerate() {
        a[(r, 0)] = ev;
        a[(r, 1 + r)] = -1.0;
    }
    let b = DVector::from_vec(svec(&c_mat));
    let mut cvec = vec![0.0; 1 + d];
    cvec[0] = 1.0;
    let program = ConicProgram {
        c: DVector::from_vec(cvec),
        a,
        b,
        blocks: vec![BlockKind::Free { dim: 1 }, BlockKind::Psd { order: n }],
        names: names(1 + d),
    };
    CorpusProblem {
        program,
        optimum: lam_max,
        label: label.to_string(),
    }
}

/// min C . X s.t. trace(X) = 1, X psd; optimum is the smallest eigenvalue.
fn eigmin_sdp(c_mat: DMatrix<f64>, label: &str) -> CorpusProblem {
    let n = c_mat.nrows();
    let d = svec_dim(n);
    let lam_min = c_mat
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let a = DMatrix::from_row_slice(1, d, &svec(&DMatrix::identity(n, n)));
    let program = ConicProgram {
        c: DVector::from_vec(svec(&c_mat)),
        a,
        b: DVector::from_vec(vec![1.0]),
        blocks: vec![BlockKind::Psd { order: n }],
        names: names(d),
    };
    CorpusProblem {
        program,
        optimum: lam_min,
        label: label.to_string(),
    }
}

/// min t s.t. [[t, a], [a, t]] psd; optimum |a|.
fn abs_sdp(aval: f64) -> CorpusProblem {
    // variables: t free, Z psd order 2; rows tie Z to [[t, a],[a, t]]
    let mut a = DMatrix::zeros(3, 4);
    let b = DVector::from_vec(vec![0.0, std::f64::consts::SQRT_2 * aval, 0.0]);
    // Z11 - t = 0, Z12 = sqrt2*a, Z22 - t = 0
    a[(0, 1)] = 1.0;
    a[(0, 0)] = -1.0;
    a[(1, 2)] = 1.0;
    a[(2, 3)] = 1.0;
    a[(2, 0)] = -1.0;
    let program = ConicProgram {
        c: DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
        a,
        b,
        blocks: vec![BlockKind::Free { dim: 1 }, BlockKind::Psd { order: 2 }],
        names: names(4),
    };
    CorpusProblem {
        program,
        optimum: aval.abs(),
        label: format!("abs via order-2 sdp, a={aval}"),
    }
}

/// Diagonal SDP that reduces to an LP: min c'diag(X), trace(X) = 1.
fn diagonal_sdp(cdiag: Vec<f64>) -> CorpusProblem {
    let n = cdiag.len();
    let c_mat = DMatrix::from_diagonal(&DVector::from_vec(cdiag.clone()));
    let opt = cdiag.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut p = eigmin_sdp(c_mat, "diagonal sdp");
    p.optimum = opt;
    p.label = format!("diagonal sdp n={n}");
    p
}

/// The 20-problem corpus.
pub fn analytic_corpus() -> Vec<CorpusProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240);
    let mut out = Vec::new();
    out.push(simplex_lp(vec![3.0, -1.0, 2.0]));
    out.push(simplex_lp(vec![0.5, 0.25, 0.125, 1.0, -2.5]));
    out.push(simplex_lp(vec![7.0, 7.0]));
    out.push(box_lp(vec![1.0, -1.0, 0.5, -0.25]));
    out.push(box_lp(vec![-2.0, -3.0, 4.0]));
    out.push(box_lp(vec![0.0, 1.0]));
    for k in [2usize, 3, 4, 5] {
        let c = random_symmetric(&mut rng, k);
        out.push(eigmax_sdp(c, &format!("eigmax sdp order {k}")));
    }
    for k in [2usize, 3, 4, 6] {
        let c = random_symmetric(&mut rng, k);
        out.push(eigmin_sdp(c, &format!("eigmin sdp order {k}")));
    }
    out.push(abs_sdp(0.75));
    out.push(abs_sdp(-4.0));
    out.push(diagonal_sdp(vec![2.0, -1.0, 0.5]));
    out.push(diagonal_sdp(vec![0.1, 0.2, 0.3, 0.4]));
    let mixed = {
        // min t s.t. tI - C psd with C built from a rank-1 spike
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let c_mat = &v * v.transpose() * 0.5;
        eigmax_sdp(c_mat, "rank-1 spike eigmax")
    };
    out.push(mixed);
    let near_degenerate = simplex_lp(vec![1.0, 1.0 + 1e-6, 2.0]);
    out.push(near_degenerate);
    assert_eq!(out.len(), 20);
    out
}
