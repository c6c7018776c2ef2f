//! Time-extended switching model: dc power flow, quasi-dc GIC network and
//! transformer thermal recursion per period, one shared binary per
//! switchable branch.
//!
//! Every row is tagged with a [`ConstraintClass`] so infeasibility probes can
//! rebuild the program one class at a time.

use std::collections::BTreeMap;
use std::fmt;

use gmdgrid::case::{BusType, CaseData, WindingConfig};
use gmdgrid::gic::{assemble, solve_dc, FieldInput};
use gmdgrid::scenario::{FieldScenario, Period};
use gmdgrid::thermal::zeta;
use serde::{Deserialize, Serialize};

use crate::error::{OtsError, Result};
use crate::lp::LinearProgram;

#[derive(Debug, Clone, PartialEq)]
pub struct OtsOptions {
    /// Segments of the piecewise-linear cost and loading approximations.
    pub segments: usize,
    /// Multiplier on the all-closed peak dc voltage used for the big-M.
    pub voltage_safety: f64,
    /// Relative optimality gap for branch-and-bound.
    pub gap: f64,
    pub time_limit_s: Option<f64>,
    /// Maximum binaries for exhaustive enumeration.
    pub enum_cap: usize,
    pub int_tol: f64,
}

impl Default for OtsOptions {
    fn default() -> Self {
        Self {
            segments: 8,
            voltage_safety: 4.0,
            gap: 1e-4,
            time_limit_s: None,
            enum_cap: 16,
            int_tol: 1e-6,
        }
    }
}

/// Constraint families, in the order probes add them back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    CostEpigraph,
    PowerBalance,
    LineFlow,
    FlowLimits,
    DcBalance,
    DcBranch,
    EffectiveGic,
    TopOil,
    HotSpot,
}

impl ConstraintClass {
    pub const ALL: [ConstraintClass; 9] = [
        ConstraintClass::CostEpigraph,
        ConstraintClass::PowerBalance,
        ConstraintClass::LineFlow,
        ConstraintClass::FlowLimits,
        ConstraintClass::DcBalance,
        ConstraintClass::DcBranch,
        ConstraintClass::EffectiveGic,
        ConstraintClass::TopOil,
        ConstraintClass::HotSpot,
    ];
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintClass::CostEpigraph => "cost epigraph",
            ConstraintClass::PowerBalance => "ac power balance",
            ConstraintClass::LineFlow => "switched line flow",
            ConstraintClass::FlowLimits => "flow and angle limits",
            ConstraintClass::DcBalance => "dc current balance",
            ConstraintClass::DcBranch => "switched dc branch law",
            ConstraintClass::EffectiveGic => "effective GIC",
            ConstraintClass::TopOil => "top-oil recursion",
            ConstraintClass::HotSpot => "hot-spot limit",
        };
        f.write_str(s)
    }
}

/// A dc branch as seen by the model, with its series voltage per period.
#[derive(Debug, Clone, PartialEq)]
pub struct DcEdgeData {
    pub gmd_branch: usize,
    pub from: usize,
    pub to: usize,
    pub admittance: f64,
    pub parent: usize,
    pub emf: Vec<f64>,
    /// Big-M on the branch law written in volts.
    pub big_m: f64,
}

/// Effective-GIC expression of one transformer as weights on dc edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerData {
    pub branch: usize,
    pub config: WindingConfig,
    pub weights: Vec<(usize, f64)>,
    pub i_max: f64,
    pub zeta: f64,
    pub rating: f64,
    pub to_rated: f64,
    pub coeff: f64,
    pub ambient: f64,
    pub limit: f64,
    /// Initial top-oil rise when given; steady state from period one otherwise.
    pub initial: Option<f64>,
}

/// Column indices of one period.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeriodCols {
    pub pg: Vec<usize>,
    pub theta: Vec<usize>,
    pub flow: Vec<usize>,
    pub v: Vec<usize>,
    pub i: Vec<usize>,
    pub i_eff: Vec<usize>,
    pub delta: Vec<usize>,
    pub eta: Vec<usize>,
    pub du: Vec<usize>,
    pub cost: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelCounts {
    pub periods: usize,
    pub generators: usize,
    pub buses: usize,
    pub branches: usize,
    pub dc_nodes: usize,
    pub dc_edges: usize,
    pub transformers: usize,
    pub switchable: usize,
    pub quadratic_generators: usize,
    pub columns: usize,
    pub rows: usize,
}

impl ModelCounts {
    /// Primary variables: dispatch, angles, flows, dc voltages and currents,
    /// top-oil and hot-spot rise per period, plus one binary per switch.
    pub fn primary_columns(&self) -> usize {
        self.periods
            * (self.generators + self.buses + self.branches + self.dc_nodes + self.dc_edges + 2 * self.transformers)
            + self.switchable
    }

    /// Auxiliary variables: effective GIC and steady-state rise per
    /// transformer, cost epigraph per quadratic generator.
    pub fn auxiliary_columns(&self) -> usize {
        self.periods * (2 * self.transformers + self.quadratic_generators)
    }
}

#[derive(Debug, Clone)]
pub struct OtsModel {
    pub lp: LinearProgram,
    pub row_class: Vec<ConstraintClass>,
    pub periods: Vec<Period>,
    pub dt: f64,
    pub generators: Vec<usize>,
    pub buses: Vec<usize>,
    pub branches: Vec<usize>,
    /// Switchable branch ids, ascending; binary `k` belongs to `switchable[k]`.
    pub switchable: Vec<usize>,
    pub z: Vec<usize>,
    pub dc_nodes: Vec<usize>,
    pub dc_edges: Vec<DcEdgeData>,
    pub transformers: Vec<TransformerData>,
    pub cols: Vec<PeriodCols>,
    pub voltage_bound: f64,
    pub counts: ModelCounts,
    pub options: OtsOptions,
}

impl OtsModel {
    pub fn num_binaries(&self) -> usize {
        self.z.len()
    }

    /// Copy of the program restricted to the given classes, binary columns
    /// fixed where `fix` has a value.
    pub fn restricted(&self, keep: impl Fn(ConstraintClass) -> bool, fix: &[Option<bool>]) -> LinearProgram {
        let mut lp = LinearProgram {
            cost: self.lp.cost.clone(),
            col_lower: self.lp.col_lower.clone(),
            col_upper: self.lp.col_upper.clone(),
            rows: Vec::new(),
            offset: self.lp.offset,
        };
        for (row, &class) in self.lp.rows.iter().zip(&self.row_class) {
            if keep(class) {
                lp.rows.push(row.clone());
            }
        }
        self.fix_binaries(&mut lp, fix);
        lp
    }

    pub fn fix_binaries(&self, lp: &mut LinearProgram, fix: &[Option<bool>]) {
        for (k, &col) in self.z.iter().enumerate() {
            let (lo, hi) = match fix.get(k).copied().flatten() {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            };
            lp.col_lower[col] = lo;
            lp.col_upper[col] = hi;
        }
    }
}

struct Builder {
    lp: LinearProgram,
    class: Vec<ConstraintClass>,
}

impl Builder {
    fn row(&mut self, class: ConstraintClass, coeffs: Vec<(usize, f64)>, lo: f64, hi: f64) {
        self.lp.add_row(coeffs, lo, hi);
        self.class.push(class);
    }
}

/// Peak absolute dc node voltage over all periods with every nominal branch
/// closed.
fn peak_dc_voltage(case: &CaseData, periods: &[Period]) -> Result<f64> {
    let mut peak = 0.0f64;
    for p in periods {
        let sys = assemble::<f64>(case, &FieldInput::Field(p.field.clone()), None)?;
        let sol = solve_dc(&sys).map_err(|e| OtsError::BigM(e.to_string()))?;
        for v in sol.node_voltages.values() {
            if !v.is_finite() {
                return Err(OtsError::BigM(format!("non-finite dc voltage in period {}", p.index)));
            }
            peak = peak.max(v.abs());
        }
    }
    Ok(peak)
}

pub fn build_model(case: &CaseData, field: &FieldScenario, options: &OtsOptions) -> Result<OtsModel> {
    let periods = field.periods()?;
    let nt = periods.len();
    let segments = options.segments.max(1);

    let generators: Vec<usize> = case.generators.iter().filter(|g| g.gen_status).map(|g| g.index).collect();
    let buses: Vec<usize> = case.buses.iter().map(|b| b.id).collect();
    let bus_pos: BTreeMap<usize, usize> = buses.iter().enumerate().map(|(k, &b)| (b, k)).collect();
    let branches: Vec<usize> = case.branches.iter().filter(|b| b.br_status).map(|b| b.index).collect();
    let mut switchable: Vec<usize> = case
        .branches
        .iter()
        .filter(|b| b.br_status && b.switchable)
        .map(|b| b.index)
        .collect();
    switchable.sort_unstable();
    let switch_pos: BTreeMap<usize, usize> = switchable.iter().enumerate().map(|(k, &b)| (b, k)).collect();

    // dc network under the nominal topology; opened lines are handled by the
    // big-M rows, so the node and edge sets never change with z
    let mut dc_nodes = Vec::new();
    let mut grounding = Vec::new();
    let mut dc_edges: Vec<DcEdgeData> = Vec::new();
    if case.has_dc_network() {
        let first = periods.first().map(|p| FieldInput::Field(p.field.clone()));
        let sys = assemble::<f64>(case, first.as_ref().unwrap_or(&FieldInput::CaseVoltages), None)?;
        dc_nodes = sys.node_ids.clone();
        grounding = sys.grounding.clone();
        for e in &sys.edges {
            dc_edges.push(DcEdgeData {
                gmd_branch: e.branch,
                from: e.from,
                to: e.to,
                admittance: e.admittance,
                parent: e.parent,
                emf: Vec::with_capacity(nt),
                big_m: 0.0,
            });
        }
        for p in &periods {
            let input = FieldInput::Field(p.field.clone());
            for e in dc_edges.iter_mut() {
                e.emf.push(gmdgrid::gic::branch_emf(case, &input, e.gmd_branch)?);
            }
        }
    }
    let voltage_bound = if dc_nodes.is_empty() {
        0.0
    } else {
        (options.voltage_safety * peak_dc_voltage(case, &periods)?).max(1.0)
    };
    for e in dc_edges.iter_mut() {
        let emf_max = e.emf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        e.big_m = 2.0 * voltage_bound + emf_max;
    }
    let edge_pos: BTreeMap<usize, usize> = dc_edges.iter().enumerate().map(|(k, e)| (e.gmd_branch, k)).collect();

    let mut transformers = Vec::new();
    for row in case.transformers() {
        let br = case.branch(row.branch).expect("validated");
        if !br.br_status {
            continue;
        }
        let th = case.thermal_for(row.branch).expect("validated");
        let alpha = case.turns_ratio(row).unwrap_or(1.0);
        let raw: Vec<(Option<usize>, f64)> = match row.config {
            WindingConfig::GwyeDelta => vec![(row.gmd_br_hi, 1.0)],
            WindingConfig::GwyeGwye => vec![(row.gmd_br_hi, 1.0), (row.gmd_br_lo, 1.0 / alpha)],
            WindingConfig::GwyeGwyeAuto => {
                vec![(row.gmd_br_se, alpha / (alpha + 1.0)), (row.gmd_br_co, 1.0 / (alpha + 1.0))]
            }
            WindingConfig::DeltaDelta | WindingConfig::None => Vec::new(),
        };
        let weights: Vec<(usize, f64)> = raw
            .into_iter()
            .filter_map(|(id, w)| id.and_then(|id| edge_pos.get(&id)).map(|&k| (k, w)))
            .collect();
        let reach: f64 = weights
            .iter()
            .map(|&(k, w)| w.abs() * dc_edges[k].admittance * dc_edges[k].big_m)
            .sum();
        transformers.push(TransformerData {
            branch: row.branch,
            config: row.config,
            i_max: reach.min(case.gic_bound(row.branch)),
            weights,
            zeta: zeta(th.to_time_c, field.dt),
            rating: br.rate_a,
            to_rated: th.to_rated,
            coeff: th.hs_coeff,
            ambient: th.temp_amb,
            limit: th.limit(),
            initial: th.to_inited.then_some(th.to_init),
        });
    }

    let mut b = Builder {
        lp: LinearProgram::default(),
        class: Vec::new(),
    };
    let z: Vec<usize> = switchable.iter().map(|_| b.lp.add_col(0.0, 0.0, 1.0)).collect();

    let theta_bound: f64 = case
        .branches
        .iter()
        .filter(|br| br.br_status)
        .map(|br| br.angle_bigm)
        .sum::<f64>()
        .max(std::f64::consts::PI);
    let quadratic = case
        .generators
        .iter()
        .filter(|g| g.gen_status && g.c2 > 0.0)
        .count();

    let mut cols = Vec::with_capacity(nt);
    for (t, _period) in periods.iter().enumerate() {
        let mut pc = PeriodCols::default();

        // generators and cost
        for g in case.generators.iter().filter(|g| g.gen_status) {
            let p = b.lp.add_col(g.c1, g.pmin, g.pmax);
            b.lp.offset += g.c0;
            pc.pg.push(p);
            if g.c2 > 0.0 {
                let w_hi = g.pmin.powi(2).max(g.pmax.powi(2));
                let w = b.lp.add_col(g.c2, 0.0, w_hi);
                for k in 0..=segments {
                    let x = g.pmin + (g.pmax - g.pmin) * k as f64 / segments as f64;
                    // w ≥ 2 x p − x²
                    b.row(ConstraintClass::CostEpigraph, vec![(w, 1.0), (p, -2.0 * x)], -x * x, f64::INFINITY);
                }
                pc.cost.push(Some(w));
            } else {
                pc.cost.push(None);
            }
        }

        for bus in &case.buses {
            let (lo, hi) = if bus.bus_type == BusType::Slack {
                (0.0, 0.0)
            } else {
                (-theta_bound, theta_bound)
            };
            pc.theta.push(b.lp.add_col(0.0, lo, hi));
        }
        for &id in &branches {
            let br = case.branch(id).expect("listed");
            pc.flow.push(b.lp.add_col(0.0, -br.rate_a, br.rate_a));
        }

        // ac power balance: out-flows minus in-flows equal net injection
        let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); buses.len()];
        for (k, &id) in branches.iter().enumerate() {
            let br = case.branch(id).expect("listed");
            balance[bus_pos[&br.f_bus]].push((pc.flow[k], 1.0));
            balance[bus_pos[&br.t_bus]].push((pc.flow[k], -1.0));
        }
        for (k, g) in case.generators.iter().filter(|g| g.gen_status).enumerate() {
            balance[bus_pos[&g.gen_bus]].push((pc.pg[k], -1.0));
        }
        for (k, bus) in case.buses.iter().enumerate() {
            let rhs = -bus.pd - bus.gs;
            b.row(ConstraintClass::PowerBalance, std::mem::take(&mut balance[k]), rhs, rhs);
        }

        // switched flows and limits
        for (k, &id) in branches.iter().enumerate() {
            let br = case.branch(id).expect("listed");
            let bsus = br.dc_susceptance();
            let (tf, tt, p) = (pc.theta[bus_pos[&br.f_bus]], pc.theta[bus_pos[&br.t_bus]], pc.flow[k]);
            let ohm = vec![(p, 1.0), (tf, -bsus), (tt, bsus)];
            match switch_pos.get(&id) {
                None => {
                    b.row(ConstraintClass::LineFlow, ohm, 0.0, 0.0);
                    b.row(ConstraintClass::FlowLimits, vec![(tf, 1.0), (tt, -1.0)], -br.angle_lim, br.angle_lim);
                }
                Some(&s) => {
                    let zc = z[s];
                    let m = bsus.abs() * br.angle_bigm;
                    let mut up = ohm.clone();
                    up.push((zc, m));
                    b.row(ConstraintClass::LineFlow, up, f64::NEG_INFINITY, m);
                    let mut dn = ohm;
                    dn.push((zc, -m));
                    b.row(ConstraintClass::LineFlow, dn, -m, f64::INFINITY);
                    b.row(ConstraintClass::FlowLimits, vec![(p, 1.0), (zc, -br.rate_a)], f64::NEG_INFINITY, 0.0);
                    b.row(ConstraintClass::FlowLimits, vec![(p, 1.0), (zc, br.rate_a)], 0.0, f64::INFINITY);
                    let slope = br.angle_lim - br.angle_bigm;
                    b.row(
                        ConstraintClass::FlowLimits,
                        vec![(tf, 1.0), (tt, -1.0), (zc, -slope)],
                        f64::NEG_INFINITY,
                        br.angle_bigm,
                    );
                    b.row(
                        ConstraintClass::FlowLimits,
                        vec![(tf, 1.0), (tt, -1.0), (zc, slope)],
                        -br.angle_bigm,
                        f64::INFINITY,
                    );
                }
            }
        }

        // dc network
        for _ in &dc_nodes {
            pc.v.push(b.lp.add_col(0.0, -voltage_bound, voltage_bound));
        }
        for e in &dc_edges {
            let reach = e.admittance * e.big_m;
            pc.i.push(b.lp.add_col(0.0, -reach, reach));
        }
        let mut kcl: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dc_nodes.len()];
        for (k, e) in dc_edges.iter().enumerate() {
            kcl[e.to].push((pc.i[k], 1.0));
            kcl[e.from].push((pc.i[k], -1.0));
        }
        for (n, row) in kcl.iter_mut().enumerate() {
            if grounding[n] != 0.0 {
                row.push((pc.v[n], -grounding[n]));
            }
            b.row(ConstraintClass::DcBalance, std::mem::take(row), 0.0, 0.0);
        }
        for (k, e) in dc_edges.iter().enumerate() {
            let (i, vf, vt) = (pc.i[k], pc.v[e.from], pc.v[e.to]);
            let emf = e.emf[t];
            // I/a − (V_f − V_t) = 𝒱 when closed
            let law = vec![(i, 1.0 / e.admittance), (vf, -1.0), (vt, 1.0)];
            match switch_pos.get(&e.parent) {
                None => b.row(ConstraintClass::DcBranch, law, emf, emf),
                Some(&s) => {
                    let (zc, m) = (z[s], e.big_m);
                    let mut up = law.clone();
                    up.push((zc, m));
                    b.row(ConstraintClass::DcBranch, up, f64::NEG_INFINITY, emf + m);
                    let mut dn = law;
                    dn.push((zc, -m));
                    b.row(ConstraintClass::DcBranch, dn, emf - m, f64::INFINITY);
                    let reach = e.admittance * m;
                    b.row(ConstraintClass::DcBranch, vec![(i, 1.0), (zc, -reach)], f64::NEG_INFINITY, 0.0);
                    b.row(ConstraintClass::DcBranch, vec![(i, 1.0), (zc, reach)], 0.0, f64::INFINITY);
                }
            }
        }

        // transformers: effective GIC, loading, top-oil, hot-spot
        for (x, tr) in transformers.iter().enumerate() {
            let ie_hi = if tr.weights.is_empty() { 0.0 } else { tr.i_max };
            let ie = b.lp.add_col(0.0, 0.0, ie_hi);
            let eta = b.lp.add_col(0.0, 0.0, tr.coeff * ie_hi);
            let du = b.lp.add_col(0.0, 0.0, tr.to_rated);
            let d_bound = tr.initial.unwrap_or(0.0).abs() + tr.to_rated * (1.0f64).max(1.0 / tr.zeta) + 1.0;
            let delta = b.lp.add_col(0.0, -d_bound, d_bound);

            if !tr.weights.is_empty() {
                let expr: Vec<(usize, f64)> = tr.weights.iter().map(|&(k, w)| (pc.i[k], w)).collect();
                let mut plus = vec![(ie, 1.0)];
                plus.extend(expr.iter().map(|&(c, w)| (c, -w)));
                b.row(ConstraintClass::EffectiveGic, plus, 0.0, f64::INFINITY);
                let mut minus = vec![(ie, 1.0)];
                minus.extend(expr.iter().copied());
                b.row(ConstraintClass::EffectiveGic, minus, 0.0, f64::INFINITY);
            }
            if let Some(&s) = switch_pos.get(&tr.branch) {
                b.row(ConstraintClass::EffectiveGic, vec![(ie, 1.0), (z[s], -ie_hi)], f64::NEG_INFINITY, 0.0);
            }
            b.row(ConstraintClass::TopOil, vec![(eta, 1.0), (ie, -tr.coeff)], 0.0, 0.0);

            // δu ≥ chord of δr·(p/s̄)² on each segment of [−s̄, s̄]
            let flow = pc.flow[branches.iter().position(|&id| id == tr.branch).expect("in service")];
            let s_bar = tr.rating;
            for k in 0..segments {
                let x0 = -s_bar + 2.0 * s_bar * k as f64 / segments as f64;
                let x1 = -s_bar + 2.0 * s_bar * (k + 1) as f64 / segments as f64;
                let slope = tr.to_rated * (x0 + x1) / (s_bar * s_bar);
                let f0 = tr.to_rated * (x0 / s_bar).powi(2);
                b.row(ConstraintClass::TopOil, vec![(du, 1.0), (flow, -slope)], f0 - slope * x0, f64::INFINITY);
            }

            let z1 = 1.0 + tr.zeta;
            let carry = (1.0 - tr.zeta) / z1;
            if t == 0 {
                match tr.initial {
                    Some(d0) => {
                        b.row(ConstraintClass::TopOil, vec![(delta, 1.0), (du, -2.0 / z1)], -carry * d0, -carry * d0);
                    }
                    None => b.row(ConstraintClass::TopOil, vec![(delta, 1.0), (du, -1.0)], 0.0, 0.0),
                }
            } else {
                let prev: &PeriodCols = &cols[t - 1];
                b.row(
                    ConstraintClass::TopOil,
                    vec![(delta, 1.0), (du, -1.0 / z1), (prev.du[x], -1.0 / z1), (prev.delta[x], carry)],
                    0.0,
                    0.0,
                );
            }
            b.row(
                ConstraintClass::HotSpot,
                vec![(delta, 1.0), (eta, 1.0)],
                f64::NEG_INFINITY,
                tr.limit - tr.ambient,
            );
            pc.i_eff.push(ie);
            pc.eta.push(eta);
            pc.du.push(du);
            pc.delta.push(delta);
        }
        cols.push(pc);
    }

    let counts = ModelCounts {
        periods: nt,
        generators: generators.len(),
        buses: buses.len(),
        branches: branches.len(),
        dc_nodes: dc_nodes.len(),
        dc_edges: dc_edges.len(),
        transformers: transformers.len(),
        switchable: switchable.len(),
        quadratic_generators: quadratic,
        columns: b.lp.num_cols(),
        rows: b.lp.num_rows(),
    };
    debug_assert_eq!(counts.columns, counts.primary_columns() + counts.auxiliary_columns());
    debug_assert!(b
        .lp
        .rows
        .iter()
        .all(|r| r.coeffs.iter().all(|&(j, _)| j < counts.columns)));
    log::debug!(
        "model: {} columns, {} rows, {} binaries, dc voltage bound {:.1} V",
        counts.columns,
        counts.rows,
        counts.switchable,
        voltage_bound
    );

    Ok(OtsModel {
        lp: b.lp,
        row_class: b.class,
        periods,
        dt: field.dt,
        generators,
        buses,
        branches,
        switchable,
        z,
        dc_nodes,
        dc_edges,
        transformers,
        cols,
        voltage_bound,
        counts,
        options: options.clone(),
    })
}
