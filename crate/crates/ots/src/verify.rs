//! Independent re-simulation of a plan: dc power flow from the plan's
//! dispatch, quasi-dc solve on the plan's topology, thermal simulation of the
//! result, and pointwise limit checks. Nothing here reads the model.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use gmdgrid::case::{BusType, CaseData};
use gmdgrid::gic::{solve_gic, FieldInput};
use gmdgrid::scenario::FieldScenario;
use gmdgrid::thermal::{simulate, ThermalInput};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{OtsError, Result};
use crate::plan::{dispatch_cost, MitigationPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    PowerBalance,
    GeneratorLimit,
    FlowLimit,
    AngleLimit,
    GicBound,
    HotSpot,
    SwitchOff,
    FlowMismatch,
    GicMismatch,
    Objective,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Check::PowerBalance => "load balance",
            Check::GeneratorLimit => "generator limit",
            Check::FlowLimit => "branch flow limit",
            Check::AngleLimit => "angle difference limit",
            Check::GicBound => "effective GIC bound",
            Check::HotSpot => "hot-spot limit",
            Check::SwitchOff => "open branch carries flow or GIC",
            Check::FlowMismatch => "plan flow differs from dc power flow",
            Check::GicMismatch => "plan GIC differs from dc solve",
            Check::Objective => "objective differs from recomputed cost",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: Check,
    /// Bus, generator, branch or gmd branch id, depending on the check.
    pub id: usize,
    pub t_min: f64,
    pub amount: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at id {} t = {} min: {:.6e}", self.check, self.id, self.t_min, self.amount)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Absolute tolerance in the unit of each check, scaled by the limit when
    /// the limit exceeds one.
    pub tol: f64,
    pub objective_rel_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            objective_rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
    /// Worst excess per check, including those within tolerance.
    pub worst: BTreeMap<Check, f64>,
    /// Re-simulated peak absolute hot-spot per transformer.
    pub peak_hotspot: BTreeMap<usize, f64>,
    /// Re-simulated effective GIC per transformer at each period.
    pub i_eff: BTreeMap<usize, Vec<f64>>,
    pub recomputed_objective: f64,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, check: Check, id: usize, t_min: f64, excess: f64, tol: f64) {
        let w = self.worst.entry(check).or_insert(f64::NEG_INFINITY);
        *w = w.max(excess);
        if excess > tol {
            self.violations.push(Violation {
                check,
                id,
                t_min,
                amount: excess,
            });
        }
    }
}

fn scaled(tol: f64, limit: f64) -> f64 {
    tol * limit.abs().max(1.0)
}

type DcFlow = (BTreeMap<usize, f64>, BTreeMap<usize, f64>, Vec<(usize, f64)>);

/// Nodal dc power flow with the plan's dispatch on the plan's topology.
/// Returns flows per closed branch, or the buses of unbalanced islands.
fn dc_power_flow(
    case: &CaseData,
    closed: &[usize],
    injection: &[f64],
) -> DcFlow {
    let n = case.buses.len();
    let pos: BTreeMap<usize, usize> = case.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
    let mut adj = vec![Vec::new(); n];
    for &id in closed {
        let br = case.branch(id).expect("closed branch exists");
        adj[pos[&br.f_bus]].push(pos[&br.t_bus]);
        adj[pos[&br.t_bus]].push(pos[&br.f_bus]);
    }
    // islands, referenced at their slack or lowest bus
    let mut island = vec![usize::MAX; n];
    let mut reference = Vec::new();
    let mut unbalanced = Vec::new();
    for s in 0..n {
        if island[s] != usize::MAX {
            continue;
        }
        let tag = reference.len();
        let mut members = vec![s];
        island[s] = tag;
        let mut queue = VecDeque::from([s]);
        while let Some(k) = queue.pop_front() {
            for &m in &adj[k] {
                if island[m] == usize::MAX {
                    island[m] = tag;
                    members.push(m);
                    queue.push_back(m);
                }
            }
        }
        let r = members
            .iter()
            .copied()
            .find(|&k| case.buses[k].bus_type == BusType::Slack)
            .unwrap_or_else(|| *members.iter().min().expect("nonempty"));
        reference.push(r);
        let net: f64 = members.iter().map(|&k| injection[k]).sum();
        unbalanced.push((case.buses[r].id, net));
    }

    let free: Vec<usize> = (0..n).filter(|k| !reference.contains(k)).collect();
    let fpos: BTreeMap<usize, usize> = free.iter().enumerate().map(|(a, &k)| (k, a)).collect();
    let m = free.len();
    let mut b = DMatrix::<f64>::zeros(m, m);
    for &id in closed {
        let br = case.branch(id).expect("closed branch exists");
        let y = br.dc_susceptance();
        let (f, t) = (pos[&br.f_bus], pos[&br.t_bus]);
        for (i, j) in [(f, t), (t, f)] {
            if let Some(&a) = fpos.get(&i) {
                b[(a, a)] += y;
                if let Some(&c) = fpos.get(&j) {
                    b[(a, c)] -= y;
                }
            }
        }
    }
    let rhs = DVector::from_iterator(m, free.iter().map(|&k| injection[k]));
    let theta_free = b.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(m));
    let mut theta = vec![0.0; n];
    for (a, &k) in free.iter().enumerate() {
        theta[k] = theta_free[a];
    }
    let mut flows = BTreeMap::new();
    for &id in closed {
        let br = case.branch(id).expect("closed branch exists");
        let p = br.dc_susceptance() * (theta[pos[&br.f_bus]] - theta[pos[&br.t_bus]]);
        flows.insert(id, p);
    }
    let angle_diff = closed
        .iter()
        .map(|&id| {
            let br = case.branch(id).expect("closed branch exists");
            (id, theta[pos[&br.f_bus]] - theta[pos[&br.t_bus]])
        })
        .collect();
    (flows, angle_diff, unbalanced)
}

pub fn verify_plan(case: &CaseData, field: &FieldScenario, plan: &MitigationPlan) -> Result<VerifyReport> {
    verify_plan_with(case, field, plan, VerifyOptions::default())
}

pub fn verify_plan_with(
    case: &CaseData,
    field: &FieldScenario,
    plan: &MitigationPlan,
    opts: VerifyOptions,
) -> Result<VerifyReport> {
    let periods = field.periods()?;
    if periods.len() != plan.times.len()
        || periods.iter().zip(&plan.times).any(|(p, &t)| (p.t_mid - t).abs() > 1e-9)
    {
        return Err(OtsError::Plan(format!(
            "plan has {} periods, scenario at dt = {} has {}",
            plan.times.len(),
            field.dt,
            periods.len()
        )));
    }
    let tol = opts.tol;
    let mut report = VerifyReport::default();
    let topology = plan.topology();
    let closed: Vec<usize> = case
        .branches
        .iter()
        .filter(|b| b.br_status && plan.z.get(&b.index) == Some(&1))
        .map(|b| b.index)
        .collect();
    let pos: BTreeMap<usize, usize> = case.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect();

    let mut loading: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut truth_eff: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (t, period) in periods.iter().enumerate() {
        let tm = period.t_mid;

        // dispatch and generator limits
        let mut injection: Vec<f64> = case.buses.iter().map(|b| -b.pd - b.gs).collect();
        for g in case.generators.iter().filter(|g| g.gen_status) {
            let p = plan.dispatch.get(&g.index).and_then(|s| s.get(t)).copied().unwrap_or(0.0);
            injection[pos[&g.gen_bus]] += p;
            report.record(Check::GeneratorLimit, g.index, tm, (p - g.pmax).max(g.pmin - p), scaled(tol, g.pmax));
        }

        let (flows, angles, islands) = dc_power_flow(case, &closed, &injection);
        for (bus, net) in islands {
            report.record(Check::PowerBalance, bus, tm, net.abs(), tol);
        }
        for &id in &closed {
            let br = case.branch(id).expect("exists");
            let p = flows[&id];
            report.record(Check::FlowLimit, id, tm, p.abs() - br.rate_a, scaled(tol, br.rate_a));
            report.record(Check::AngleLimit, id, tm, angles[&id].abs() - br.angle_lim, tol);
            let planned = plan.flows.get(&id).and_then(|s| s.get(t)).copied().unwrap_or(0.0);
            report.record(Check::FlowMismatch, id, tm, (planned - p).abs(), scaled(1e-5, p));
        }
        for br in case.branches.iter().filter(|b| !closed.contains(&b.index)) {
            let planned = plan.flows.get(&br.index).and_then(|s| s.get(t)).copied().unwrap_or(0.0);
            report.record(Check::SwitchOff, br.index, tm, planned.abs(), tol);
        }

        // quasi-dc network on the plan topology
        if case.has_dc_network() {
            let sol = solve_gic::<f64>(case, &FieldInput::Field(period.field.clone()), Some(&topology))?;
            for g in &case.gmd_branches {
                let truth = sol.branch_currents.get(&g.index).copied().unwrap_or(0.0);
                let planned = plan.gic.get(&g.index).and_then(|s| s.get(t)).copied().unwrap_or(0.0);
                let check = if sol.branch_currents.contains_key(&g.index) {
                    Check::GicMismatch
                } else {
                    Check::SwitchOff
                };
                report.record(check, g.index, tm, (planned - truth).abs(), scaled(1e-5, truth));
            }
            for row in case.transformers() {
                let ie = sol.effective.get(&row.branch).copied().unwrap_or(0.0);
                let closed_xf = closed.contains(&row.branch);
                let ie = if closed_xf { ie } else { 0.0 };
                let bound = case.gic_bound(row.branch);
                if bound.is_finite() {
                    report.record(Check::GicBound, row.branch, tm, ie - bound, scaled(tol, bound));
                }
                if !closed_xf {
                    let planned = plan.i_eff.get(&row.branch).and_then(|s| s.get(t)).copied().unwrap_or(0.0);
                    report.record(Check::SwitchOff, row.branch, tm, planned.abs(), tol);
                }
                truth_eff.entry(row.branch).or_default().push(ie);
            }
        }
        for th in &case.thermal {
            loading
                .entry(th.branch)
                .or_default()
                .push(flows.get(&th.branch).copied().unwrap_or(0.0).abs());
        }
    }

    let trace = simulate(
        case,
        &ThermalInput {
            times: plan.times.clone(),
            dt: field.dt,
            loading,
            i_eff: truth_eff.clone(),
        },
    )?;
    for (&branch, points) in &trace.series {
        let mut peak = f64::NEG_INFINITY;
        for p in points {
            peak = peak.max(p.hotspot);
            report.record(Check::HotSpot, branch, p.t_min, p.hotspot - p.limit, scaled(tol, p.limit));
        }
        report.peak_hotspot.insert(branch, peak);
    }
    report.i_eff = truth_eff;

    let cost = dispatch_cost(case, &plan.dispatch);
    report.recomputed_objective = cost;
    let rel = (cost - plan.objective).abs() / cost.abs().max(1e-9);
    report.record(Check::Objective, 0, 0.0, rel, opts.objective_rel_tol);
    Ok(report)
}
