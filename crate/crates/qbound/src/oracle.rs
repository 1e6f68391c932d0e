//! Desk-scale ground truth: global minimization by spatial branch-and-bound
//! driven by the quadratic bound, and by dense-grid multistart.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{solve_bound, BoundError, BoundSettings, BoundVariant, VariantTag};
use crate::conic::Status;
use crate::model::{normalize_box, normalize_objective_shift, Instance};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no feasible point found (instance may be infeasible)")]
    Infeasible,
    #[error("node budget exhausted with gap {gap:.3e}")]
    BudgetExhausted { gap: f64 },
    #[error("bound solver failed: {0}")]
    Bound(#[from] BoundError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleStatus {
    Optimal,
    BudgetExhausted,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub point: Vec<f64>,
    pub status: OracleStatus,
    pub best_bound: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub abs_gap: f64,
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    pub collect_log: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            abs_gap: 1e-4,
            max_nodes: 50_000,
            time_limit: None,
            collect_log: false,
        }
    }
}

/// One node-log line: id, box, bound, incumbent, action.
#[derive(Debug, Clone, Serialize)]
pub struct NodeLogRow {
    pub id: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bound: f64,
    pub incumbent: f64,
    pub action: &'static str,
}

struct Node {
    id: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

struct HeapEntry {
    bound: f64,
    id: usize,
    index: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; we want the smallest bound first, ties
        // broken by oldest id
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Least-squares projection onto {Ax = d} followed by box clamping,
/// alternated a few times.
fn project_feasible(inst: &Instance, x: &mut [f64]) {
    let p = inst.p();
    if p == 0 {
        for (xi, (&l, &u)) in x.iter_mut().zip(inst.l.iter().zip(&inst.u)) {
            *xi = xi.clamp(l, u);
        }
        return;
    }
    let gram = &inst.a * inst.a.transpose();
    let lu = gram.lu();
    for _ in 0..6 {
        let xv = DVector::from_column_slice(x);
        let resid = &inst.a * &xv - &inst.d;
        if let Some(w) = lu.solve(&resid) {
            let corr = inst.a.transpose() * w;
            for i in 0..inst.n {
                x[i] -= corr[i];
            }
        }
        for (xi, (&l, &u)) in x.iter_mut().zip(inst.l.iter().zip(&inst.u)) {
            *xi = xi.clamp(l, u);
        }
    }
}

/// Projected-gradient polish of the objective with a quadratic penalty on
/// violated constraints.
fn polish(inst: &Instance, x: &mut Vec<f64>, iters: usize) {
    let mut rho: f64 = 10.0;
    let merit = |inst: &Instance, x: &[f64], rho: f64| {
        let ev = inst.evaluate(x);
        ev.objective
            + rho
                * ev.constraint_values
                    .iter()
                    .map(|&g| g.max(0.0).powi(2))
                    .sum::<f64>()
    };
    let mut step = 0.1;
    for it in 0..iters {
        if it > 0 && it % 20 == 0 {
            rho = (rho * 10.0).min(1e6);
        }
        // gradient of objective + penalty
        let mut grad = inst.q[0].mul_vec(x);
        for (gi, ci) in grad.iter_mut().zip(&inst.c[0]) {
            *gi = 2.0 * *gi + 2.0 * ci;
        }
        let ev = inst.evaluate(x);
        for i in 0..inst.m() {
            let g = ev.constraint_values[i];
            if g > 0.0 {
                let qx = inst.q[i + 1].mul_vec(x);
                for k in 0..inst.n {
                    grad[k] += 2.0 * rho * g * (2.0 * qx[k] + 2.0 * inst.c[i + 1][k]);
                }
            }
        }
        let base = merit(inst, x, rho);
        let mut accepted = false;
        for _ in 0..20 {
            let mut cand: Vec<f64> = x.iter().zip(&grad).map(|(&xi, &gi)| xi - step * gi).collect();
            project_feasible(inst, &mut cand);
            if merit(inst, &cand, rho) < base - 1e-14 {
                *x = cand;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        if !accepted {
            step = 0.1;
        }
    }
}

/// Cheap interval test: true when the node box certainly contains no
/// feasible point.
fn interval_infeasible(inst: &Instance, lo: &[f64], hi: &[f64]) -> bool {
    let n = inst.n;
    // quadratic constraints: min over box of x'Qx + 2c'x <= b needed
    for i in 0..inst.m() {
        let q = &inst.q[i + 1];
        let c = &inst.c[i + 1];
        let mut min_val = 0.0;
        for a in 0..n {
            for b2 in a..n {
                let coeff = if a == b2 { q.get(a, a) } else { 2.0 * q.get(a, b2) };
                if coeff == 0.0 {
                    continue;
                }
                // range of x_a x_b2 over the box
                let cands = [
                    lo[a] * lo[b2],
                    lo[a] * hi[b2],
                    hi[a] * lo[b2],
                    hi[a] * hi[b2],
                ];
                let (pmin, pmax) = cands
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), &v| {
                        (mn.min(v), mx.max(v))
                    });
                // diagonal terms with 0 in range can reach 0
                let (pmin, pmax) = if a == b2 && lo[a] < 0.0 && hi[a] > 0.0 {
                    (pmin.min(0.0), pmax)
                } else {
                    (pmin, pmax)
                };
                min_val += if coeff > 0.0 { coeff * pmin } else { coeff * pmax };
            }
            let lc = 2.0 * c[a];
            min_val += if lc > 0.0 { lc * lo[a] } else { lc * hi[a] };
        }
        if min_val > inst.b[i] + 1e-12 {
            return true;
        }
    }
    // equality rows: d must lie in the interval range of Ax
    for j in 0..inst.p() {
        let mut rmin = 0.0;
        let mut rmax = 0.0;
        for a in 0..n {
            let w = inst.a[(j, a)];
            if w > 0.0 {
                rmin += w * lo[a];
                rmax += w * hi[a];
            } else {
                rmin += w * hi[a];
                rmax += w * lo[a];
            }
        }
        if inst.d[j] < rmin - 1e-9 || inst.d[j] > rmax + 1e-9 {
            return true;
        }
    }
    false
}

fn sub_instance(norm: &Instance, lo: &[f64], hi: &[f64]) -> Instance {
    let mut sub = norm.clone();
    sub.l = lo.to_vec();
    sub.u = hi.to_vec();
    sub
}

/// Global minimization by best-bound-first spatial branch-and-bound with
/// quadratic-bound node relaxations. Points and values refer to the
/// original instance.
pub fn global_minimize(inst: &Instance, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    let (result, _log) = global_minimize_logged(inst, opts)?;
    Ok(result)
}

pub fn global_minimize_logged(
    inst: &Instance,
    opts: &OracleOptions,
) -> Result<(OracleResult, Vec<NodeLogRow>), OracleError> {
    let started = Instant::now();
    let shift = normalize_objective_shift(inst);
    let (norm, map) = normalize_box(inst);
    let n = norm.n;
    let bound_settings = BoundSettings {
        verify_samples: 0,
        ..Default::default()
    };
    let qb = BoundVariant::new(VariantTag::Qb);

    let mut log: Vec<NodeLogRow> = Vec::new();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut next_id = 0usize;
    let mut processed = 0usize;

    // evaluate candidates in normalized coordinates, polish, update incumbent
    let try_candidate = |cand: &[f64], incumbent: &mut Option<(f64, Vec<f64>)>| {
        let mut x = cand.to_vec();
        project_feasible(&norm, &mut x);
        polish(&norm, &mut x, 40);
        let ev = norm.evaluate(&x);
        if ev.max_violation() <= 1e-7 {
            let val = ev.objective;
            if incumbent.as_ref().map_or(true, |(best, _)| val < *best) {
                *incumbent = Some((val, x));
            }
        }
    };

    // root
    let root_lo = vec![0.0; n];
    let root_hi = vec![1.0; n];
    let bound_node = |lo: &[f64],
                          hi: &[f64],
                          parent_bound: f64,
                          incumbent: &mut Option<(f64, Vec<f64>)>|
     -> Option<f64> {
        if interval_infeasible(&norm, lo, hi) {
            return None;
        }
        let sub = sub_instance(&norm, lo, hi);
        match solve_bound(&sub, &qb, &bound_settings) {
            Ok(solved) => {
                let lb = solved.report.bound - 1e-7 * (1.0 + solved.report.bound.abs());
                // candidate from the relaxation's first-order moment
                if let Some(mp) = &solved.report.moment {
                    // moment x lives in the sub-box's normalized coords
                    let cand: Vec<f64> = mp
                        .x_vec
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| {
                            let span = hi[i] - lo[i];
                            lo[i] + v.clamp(0.0, 1.0) * span
                        })
                        .collect();
                    try_candidate(&cand, incumbent);
                }
                let center: Vec<f64> = lo.iter().zip(hi).map(|(&a, &b)| 0.5 * (a + b)).collect();
                try_candidate(&center, incumbent);
                Some(lb.max(parent_bound))
            }
            Err(BoundError::SolverFailure(Status::DualInfeasible)) => None,
            Err(_) => Some(parent_bound),
        }
    };

    let root_bound = match bound_node(&root_lo, &root_hi, f64::NEG_INFINITY, &mut incumbent) {
        Some(b) => b,
        None => return Err(OracleError::Infeasible),
    };
    nodes.push(Node {
        id: next_id,
        lo: root_lo,
        hi: root_hi,
    });
    heap.push(HeapEntry {
        bound: root_bound,
        id: next_id,
        index: 0,
    });
    next_id += 1;

    let finish = |incumbent: &Option<(f64, Vec<f64>)>,
                  best_bound: f64,
                  status: OracleStatus,
                  nodes_done: usize,
                  map: &crate::model::AffineMap,
                  log: Vec<NodeLogRow>| {
        incumbent
            .as_ref()
            .map(|(val, x)| {
                (
                    OracleResult {
                        value: val + shift,
                        point: map.to_original(x),
                        status,
                        best_bound: best_bound + shift,
                        nodes: nodes_done,
                    },
                    log,
                )
            })
            .ok_or(OracleError::Infeasible)
    };

    loop {
        let entry = match heap.pop() {
            Some(e) => e,
            None => {
                let bb = incumbent.as_ref().map(|(v, _)| *v).unwrap_or(f64::NAN);
                return finish(
                    &incumbent,
                    bb,
                    OracleStatus::Optimal,
                    processed,
                    &map,
                    log,
                );
            }
        };
        let node_bound = entry.bound;
        if let Some((best, _)) = &incumbent {
            if node_bound >= best - opts.abs_gap {
                return finish(
                    &incumbent,
                    node_bound,
                    OracleStatus::Optimal,
                    processed,
                    &map,
                    log,
                );
            }
        }
        if processed >= opts.max_nodes
            || opts
                .time_limit
                .map_or(false, |tl| started.elapsed() > tl)
        {
            let gap = incumbent
                .as_ref()
                .map(|(v, _)| v - node_bound)
                .unwrap_or(f64::INFINITY);
            if incumbent.is_none() {
                return Err(OracleError::Infeasible);
            }
            let _ = gap;
            return finish(
                &incumbent,
                node_bound,
                OracleStatus::BudgetExhausted,
                processed,
                &map,
                log,
            );
        }
        processed += 1;
        let node = &nodes[entry.index];
        let (lo, hi) = (node.lo.clone(), node.hi.clone());

        // branch on the widest side (normalization never reintroduces
        // fixed variables: they are eliminated before this point)
        let widest = (0..n)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        if hi[widest] - lo[widest] < 1e-9 {
            // box degenerate; nothing left to split
            if opts.collect_log {
                log.push(NodeLogRow {
                    id: node.id,
                    lo,
                    hi,
                    bound: node_bound,
                    incumbent: incumbent.as_ref().map(|(v, _)| *v).unwrap_or(f64::NAN),
                    action: "exhausted",
                });
            }
            continue;
        }
        let mid = 0.5 * (lo[widest] + hi[widest]);
        if opts.collect_log {
            log.push(NodeLogRow {
                id: nodes[entry.index].id,
                lo: lo.clone(),
                hi: hi.clone(),
                bound: node_bound,
                incumbent: incumbent.as_ref().map(|(v, _)| *v).unwrap_or(f64::NAN),
                action: "branch",
            });
        }
        for side in 0..2 {
            let mut clo = lo.clone();
            let mut chi = hi.clone();
            if side == 0 {
                chi[widest] = mid;
            } else {
                clo[widest] = mid;
            }
            if let Some(b) = bound_node(&clo, &chi, node_bound, &mut incumbent) {
                let prune = incumbent
                    .as_ref()
                    .map_or(false, |(best, _)| b >= best - opts.abs_gap);
                if prune {
                    if opts.collect_log {
                        log.push(NodeLogRow {
                            id: next_id,
                            lo: clo,
                            hi: chi,
                            bound: b,
                            incumbent: incumbent.as_ref().map(|(v, _)| *v).unwrap(),
                            action: "pruned",
                        });
                    }
                    next_id += 1;
                    continue;
                }
                nodes.push(Node {
                    id: next_id,
                    lo: clo,
                    hi: chi,
                });
                heap.push(HeapEntry {
                    bound: b,
                    id: next_id,
                    index: nodes.len() - 1,
                });
                next_id += 1;
            } else {
                if opts.collect_log {
                    log.push(NodeLogRow {
                        id: next_id,
                        lo: clo,
                        hi: chi,
                        bound: f64::INFINITY,
                        incumbent: incumbent.as_ref().map(|(v, _)| *v).unwrap_or(f64::NAN),
                        action: "infeasible",
                    });
                }
                next_id += 1;
            }
        }
    }
}

/// Dense-grid multistart over the (normalized) box: enumerate grid points,
/// project onto the equalities, polish the best candidates, return the best
/// feasible value. Valid as an upper bound on the optimum.
pub fn grid_multistart(
    inst: &Instance,
    resolution: usize,
    polish_iters: usize,
) -> Result<(f64, Vec<f64>), OracleError> {
    assert!(inst.n <= 5, "grid multistart is exponential in n (n <= 5)");
    assert!(resolution >= 2);
    let shift = normalize_objective_shift(inst);
    let (norm, map) = normalize_box(inst);
    let n = norm.n;

    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = resolution.pow(n as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut x = vec![0.0; n];
        for xi in x.iter_mut() {
            *xi = (idx % resolution) as f64 / (resolution - 1) as f64;
            idx /= resolution;
        }
        project_feasible(&norm, &mut x);
        let ev = norm.evaluate(&x);
        if ev.max_violation() <= 1e-6 {
            best.push((ev.objective, x));
        } else if ev.max_violation() <= 0.25 {
            // near-feasible grid points still seed the polish stage
            best.push((ev.objective + 1e3 * ev.max_violation(), x));
        }
    }
    if best.is_empty() {
        return Err(OracleError::Infeasible);
    }
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best.truncate(24);

    let mut champion: Option<(f64, Vec<f64>)> = None;
    for (_, mut x) in best {
        polish(&norm, &mut x, polish_iters);
        let ev = norm.evaluate(&x);
        if ev.max_violation() <= 1e-6 {
            let val = ev.objective;
            if champion.as_ref().map_or(true, |(b, _)| val < *b) {
                champion = Some((val, x));
            }
        }
    }
    champion
        .map(|(v, x)| (v + shift, map.to_original(&x)))
        .ok_or(OracleError::Infeasible)
}

/// Serializes a node log to CSV (id, box, bound, incumbent, action).
pub fn node_log_csv(log: &[NodeLogRow]) -> String {
    let mut out = String::from("id,lo,hi,bound,incumbent,action\n");
    for row in log {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.id,
            fmt(&row.lo),
            fmt(&row.hi),
            row.bound,
            row.incumbent,
            row.action
        ));
    }
    out
}

