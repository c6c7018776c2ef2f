//! Branch-and-bound over the shared switching binaries, and the exhaustive
//! enumeration it is checked against. Both see the model only through
//! [`lp_solve`] on copies with tightened binary bounds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use gmdgrid::CaseData;

use crate::error::{OtsError, ProbeResult, Result};
use crate::lp::{lp_solve, LpSolution, LpStatus};
use crate::model::{ConstraintClass, OtsModel};
use crate::plan::{MitigationPlan, SolveStats};

struct Node {
    id: usize,
    bound: f64,
    fix: Vec<Option<bool>>,
}

// Min-heap on (bound, id).
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

fn solve_fixed(model: &OtsModel, fix: &[Option<bool>]) -> Result<LpSolution> {
    let mut lp = model.lp.clone();
    model.fix_binaries(&mut lp, fix);
    lp_solve(&lp)
}

/// Binary closest to one half, lowest branch id on ties; `None` when the
/// relaxation is already integral.
fn branching_variable(model: &OtsModel, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &col) in model.z.iter().enumerate() {
        let v = x[col];
        let frac = v.min(1.0 - v);
        if frac <= tol {
            continue;
        }
        // switchable is sorted by branch id, so strict comparison keeps the lowest
        if best.is_none_or(|(_, f)| frac > f) {
            best = Some((k, frac));
        }
    }
    best.map(|(k, _)| k)
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1e-9)).max(0.0)
}

/// Which class first breaks feasibility for the all-closed and all-open
/// assignments, adding classes back one at a time.
pub fn probe_infeasibility(model: &OtsModel) -> Result<Vec<ProbeResult>> {
    let n = model.num_binaries();
    let mut out = Vec::new();
    for (name, state) in [("all-closed", true), ("all-open", false)] {
        let fix = vec![Some(state); n];
        let mut first = None;
        for (k, &class) in ConstraintClass::ALL.iter().enumerate() {
            let lp = model.restricted(|c| ConstraintClass::ALL[..=k].contains(&c), &fix);
            if lp_solve(&lp)?.status != LpStatus::Optimal {
                first = Some(class);
                break;
            }
        }
        out.push(ProbeResult {
            topology: name,
            first_violated: first,
        });
        if n == 0 {
            break;
        }
    }
    Ok(out)
}

fn infeasible(model: &OtsModel) -> OtsError {
    match probe_infeasibility(model) {
        Ok(probes) => OtsError::Infeasible { probes },
        Err(e) => e,
    }
}

/// Branch-and-bound: best-bound selection after a depth-first plunge to the
/// first incumbent, branching on the most fractional binary.
pub fn solve(case: &CaseData, model: &OtsModel) -> Result<MitigationPlan> {
    let opts = &model.options;
    let start = Instant::now();
    let n = model.num_binaries();
    let mut stats = SolveStats::default();

    let root = solve_fixed(model, &vec![None; n])?;
    stats.lp_solves += 1;
    stats.nodes += 1;
    if root.status != LpStatus::Optimal {
        return Err(infeasible(model));
    }

    let mut incumbent: Option<(f64, Vec<Option<bool>>)> = None;
    let mut next_id = 1usize;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut plunge: Vec<Node> = Vec::new();

    let mut expand = |fix: Vec<Option<bool>>, sol: &LpSolution, incumbent: &mut Option<(f64, Vec<Option<bool>>)>, plunge: &mut Vec<Node>, heap: &mut BinaryHeap<Node>| {
        match branching_variable(model, &sol.primal, opts.int_tol) {
            None => {
                let assignment: Vec<Option<bool>> =
                    model.z.iter().map(|&c| Some(sol.primal[c] > 0.5)).collect();
                if incumbent.as_ref().is_none_or(|(obj, _)| sol.objective < *obj) {
                    *incumbent = Some((sol.objective, assignment));
                }
            }
            Some(k) => {
                let up_first = sol.primal[model.z[k]] >= 0.5;
                let mut children = Vec::with_capacity(2);
                for value in [!up_first, up_first] {
                    let mut f = fix.clone();
                    f[k] = Some(value);
                    children.push(Node {
                        id: next_id,
                        bound: sol.objective,
                        fix: f,
                    });
                    next_id += 1;
                }
                if incumbent.is_none() {
                    // preferred child popped first
                    plunge.extend(children);
                } else {
                    heap.extend(children);
                }
            }
        }
    };
    expand(vec![None; n], &root, &mut incumbent, &mut plunge, &mut heap);

    loop {
        if incumbent.is_some() && !plunge.is_empty() {
            heap.extend(plunge.drain(..));
        }
        let node = match plunge.pop() {
            Some(node) => node,
            None => match heap.pop() {
                Some(node) => node,
                None => break,
            },
        };
        if let Some((obj, _)) = &incumbent {
            if relative_gap(*obj, node.bound) <= opts.gap {
                // best-bound order: every remaining node is at least as bad
                heap.push(node);
                break;
            }
        }
        if let Some(limit) = opts.time_limit_s {
            if start.elapsed().as_secs_f64() > limit {
                stats.time_limited = true;
                heap.push(node);
                break;
            }
        }
        let sol = solve_fixed(model, &node.fix)?;
        stats.lp_solves += 1;
        stats.nodes += 1;
        if sol.status != LpStatus::Optimal {
            continue;
        }
        if let Some((obj, _)) = &incumbent {
            if relative_gap(*obj, sol.objective) <= opts.gap {
                continue;
            }
        }
        expand(node.fix, &sol, &mut incumbent, &mut plunge, &mut heap);
    }

    let Some((obj, fix)) = incumbent else {
        if stats.time_limited {
            return Err(OtsError::Timeout { nodes: stats.nodes });
        }
        return Err(infeasible(model));
    };
    let open_bound = heap
        .iter()
        .chain(plunge.iter())
        .map(|n| n.bound)
        .fold(obj, f64::min);
    stats.bound = open_bound.min(obj);
    stats.gap = relative_gap(obj, stats.bound);

    // clean re-solve at the integral assignment
    let fin = solve_fixed(model, &fix)?;
    stats.lp_solves += 1;
    if fin.status != LpStatus::Optimal {
        return Err(OtsError::Plan("incumbent assignment lost feasibility on re-solve".into()));
    }
    stats.wall_time_s = start.elapsed().as_secs_f64();
    log::info!(
        "branch-and-bound: {} nodes, objective {:.6}, gap {:.2e}",
        stats.nodes,
        fin.objective,
        stats.gap
    );
    Ok(MitigationPlan::from_primal(case, model, &fin.primal, "bb", stats))
}

/// Exact optimum by solving the LP for every binary assignment.
pub fn enumerate_solve(case: &CaseData, model: &OtsModel) -> Result<MitigationPlan> {
    let n = model.num_binaries();
    if n > model.options.enum_cap {
        return Err(OtsError::CapExceeded {
            binaries: n,
            cap: model.options.enum_cap,
        });
    }
    let start = Instant::now();
    let mut stats = SolveStats::default();
    let mut best: Option<LpSolution> = None;
    for mask in 0u64..(1u64 << n) {
        let fix: Vec<Option<bool>> = (0..n).map(|k| Some(mask >> k & 1 == 1)).collect();
        let sol = solve_fixed(model, &fix)?;
        stats.lp_solves += 1;
        stats.nodes += 1;
        if sol.status == LpStatus::Optimal && best.as_ref().is_none_or(|b| sol.objective < b.objective) {
            best = Some(sol);
        }
    }
    let Some(best) = best else {
        return Err(infeasible(model));
    };
    stats.bound = best.objective;
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(MitigationPlan::from_primal(case, model, &best.primal, "enum", stats))
}

/// Plan for a fixed assignment with some constraint classes dropped; used to
/// exhibit what an unmitigated topology would do.
pub fn fixed_plan(case: &CaseData, model: &OtsModel, assignment: &[bool], skip: &[ConstraintClass]) -> Result<MitigationPlan> {
    let fix: Vec<Option<bool>> = assignment.iter().map(|&b| Some(b)).collect();
    let lp = model.restricted(|c| !skip.contains(&c), &fix);
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(infeasible(model));
    }
    let stats = SolveStats {
        nodes: 1,
        lp_solves: 1,
        bound: sol.objective,
        ..Default::default()
    };
    Ok(MitigationPlan::from_primal(case, model, &sol.primal, "fixed", stats))
}
