use std::collections::BTreeMap;

use super::{assemble, DcSystem, FieldInput, GicSolution, Topology};
use crate::case::{BranchGmd, CaseData, WindingConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Pin the lowest-id node of every ungrounded component to 0 V instead
    /// of failing. Branch currents do not depend on that choice.
    pub pin_floating: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { pin_floating: true }
    }
}

pub fn solve_dc<T: Scalar>(sys: &DcSystem<T>) -> Result<GicSolution<T>> {
    solve_dc_with(sys, SolveOptions::default())
}

/// Ungrounded connected components, each as a sorted list of rows.
fn floating_components<T: Scalar>(sys: &DcSystem<T>) -> Vec<Vec<usize>> {
    let n = sys.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &sys.edges {
        let a = find(&mut parent, e.from);
        let b = find(&mut parent, e.to);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut comps: BTreeMap<usize, (bool, Vec<usize>)> = BTreeMap::new();
    for row in 0..n {
        let root = find(&mut parent, row);
        let entry = comps.entry(root).or_insert((false, Vec::new()));
        entry.0 |= sys.grounding[row] > T::zero();
        entry.1.push(row);
    }
    comps.into_values().filter(|(grounded, _)| !grounded).map(|(_, rows)| rows).collect()
}

pub fn solve_dc_with<T: Scalar>(sys: &DcSystem<T>, opts: SolveOptions) -> Result<GicSolution<T>> {
    let n = sys.len();
    let mut pinned = vec![false; n];
    for rows in floating_components(sys) {
        let ids: Vec<usize> = rows.iter().map(|&r| sys.node_ids[r]).collect();
        if !opts.pin_floating {
            return Err(Error::SingularDc { nodes: ids });
        }
        // rows follow ascending id, so the first is the lowest id
        pinned[rows[0]] = true;
        if rows.len() > 1 {
            log::warn!("ungrounded dc component {ids:?}: gmd bus {} pinned to 0 V", ids[0]);
        }
    }

    let free: Vec<usize> = (0..n).filter(|&r| !pinned[r]).collect();
    let m = free.len();
    let mut a = vec![T::zero(); m * m];
    let mut b = vec![T::zero(); m];
    for (i, &ri) in free.iter().enumerate() {
        b[i] = sys.injection[ri];
        for (j, &rj) in free.iter().enumerate() {
            a[i * m + j] = sys.g(ri, rj);
        }
    }
    cholesky_solve(&mut a, &mut b, m)?;

    let mut v = vec![T::zero(); n];
    for (i, &r) in free.iter().enumerate() {
        v[r] = b[i];
    }

    let mut node_voltages: BTreeMap<usize, T> = sys.node_ids.iter().zip(&v).map(|(&id, &x)| (id, x)).collect();
    for &id in &sys.inactive_nodes {
        node_voltages.insert(id, T::zero());
    }
    let mut branch_currents = BTreeMap::new();
    for e in &sys.edges {
        branch_currents.insert(e.branch, e.admittance * (v[e.from] - v[e.to] + e.emf));
    }
    for &id in &sys.excluded {
        branch_currents.insert(id, T::zero());
    }
    Ok(GicSolution {
        t_min: 0.0,
        node_voltages,
        branch_currents,
        effective: BTreeMap::new(),
    })
}

/// In-place Cholesky factorization and solve of the symmetric positive
/// definite `m × m` system `a x = b`; `b` receives `x`.
fn cholesky_solve<T: Scalar>(a: &mut [T], b: &mut [T], m: usize) -> Result<()> {
    let scale = (0..m).map(|i| a[i * m + i].abs()).fold(T::zero(), T::max);
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d = d - a[j * m + k] * a[j * m + k];
        }
        if !(d > T::tolerance() * scale) {
            return Err(Error::Factorization {
                row: j,
                pivot: d.to_f64_lossy(),
            });
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s = s - a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s = s - a[i * m + k] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in i + 1..m {
            s = s - a[k * m + i] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    Ok(())
}

/// Effective GIC of one transformer from its winding currents.
///
/// `alpha` is the turns ratio: high over low turns for two-winding units,
/// series over common turns for autotransformers.
pub fn effective_current<T: Scalar>(config: WindingConfig, alpha: T, hi: T, lo: T, series: T, common: T) -> T {
    match config {
        WindingConfig::GwyeDelta => hi.abs(),
        WindingConfig::GwyeGwye => ((alpha * hi + lo) / alpha).abs(),
        WindingConfig::GwyeGwyeAuto => ((alpha * series + common) / (alpha + T::one())).abs(),
        WindingConfig::DeltaDelta | WindingConfig::None => T::zero(),
    }
}

fn winding<T: Scalar>(sol: &GicSolution<T>, row: &BranchGmd, name: &'static str, id: Option<usize>) -> Result<T> {
    match id {
        None => Ok(T::zero()),
        Some(id) => sol.branch_currents.get(&id).copied().ok_or(Error::MissingWinding {
            branch: row.branch,
            winding: name,
            gmd_branch: id,
        }),
    }
}

/// Effective GIC per ac transformer branch id.
pub fn effective_gic<T: Scalar>(case: &CaseData, sol: &GicSolution<T>) -> Result<BTreeMap<usize, T>> {
    let mut out = BTreeMap::new();
    for row in case.transformers() {
        let alpha = T::of(case.turns_ratio(row).unwrap_or(1.0));
        let (hi, lo, se, co) = match row.config {
            WindingConfig::GwyeDelta => (winding(sol, row, "gmd_br_hi", row.gmd_br_hi)?, T::zero(), T::zero(), T::zero()),
            WindingConfig::GwyeGwye => (
                winding(sol, row, "gmd_br_hi", row.gmd_br_hi)?,
                winding(sol, row, "gmd_br_lo", row.gmd_br_lo)?,
                T::zero(),
                T::zero(),
            ),
            WindingConfig::GwyeGwyeAuto => (
                T::zero(),
                T::zero(),
                winding(sol, row, "gmd_br_se", row.gmd_br_se)?,
                winding(sol, row, "gmd_br_co", row.gmd_br_co)?,
            ),
            _ => (T::zero(), T::zero(), T::zero(), T::zero()),
        };
        out.insert(row.branch, effective_current(row.config, alpha, hi, lo, se, co));
    }
    Ok(out)
}

/// Assembles, solves and attaches effective GIC.
pub fn solve_gic<T: Scalar>(case: &CaseData, field: &FieldInput, topology: Option<&Topology>) -> Result<GicSolution<T>> {
    let sys = assemble::<T>(case, field, topology)?;
    let mut sol = solve_dc(&sys)?;
    sol.effective = effective_gic(case, &sol)?;
    Ok(sol)
}

/// Largest nodal current imbalance `|Σ_in I − Σ_out I − a_i V_i|`.
pub fn kcl_residual<T: Scalar>(sys: &DcSystem<T>, sol: &GicSolution<T>) -> T {
    let mut net = vec![T::zero(); sys.len()];
    for e in &sys.edges {
        let i = sol.branch_currents[&e.branch];
        net[e.from] = net[e.from] - i;
        net[e.to] = net[e.to] + i;
    }
    net.iter()
        .enumerate()
        .map(|(row, &x)| (x - sys.grounding[row] * sol.node_voltages[&sys.node_ids[row]]).abs())
        .fold(T::zero(), T::max)
}
