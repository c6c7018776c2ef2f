//! Mitigation plans: extraction from a model optimum, JSON and the
//! branch-status table.

use std::collections::BTreeMap;
use std::io::Write;

use gmdgrid::case::{BranchKind, CaseData, WindingConfig};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::OtsModel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub lp_solves: usize,
    /// Best lower bound on the linearised objective.
    pub bound: f64,
    pub gap: f64,
    pub wall_time_s: f64,
    pub time_limited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationPlan {
    pub solver: String,
    /// Final state of every ac branch, 1 closed.
    pub z: BTreeMap<usize, u8>,
    pub z_nom: BTreeMap<usize, u8>,
    pub dt: f64,
    /// Period midpoints, minutes.
    pub times: Vec<f64>,
    /// Generator id to per-period output, per-unit.
    pub dispatch: BTreeMap<usize, Vec<f64>>,
    /// In-service ac branch id to per-period flow, per-unit.
    pub flows: BTreeMap<usize, Vec<f64>>,
    pub angles: BTreeMap<usize, Vec<f64>>,
    /// GMD branch id to per-period dc current, amperes.
    pub gic: BTreeMap<usize, Vec<f64>>,
    /// Transformer branch id to per-period effective GIC, amperes. This and
    /// the thermal series are model epigraph values: exact where the hot-spot
    /// limit binds, otherwise upper bounds. `verify_plan` recomputes them.
    pub i_eff: BTreeMap<usize, Vec<f64>>,
    pub top_oil_rise: BTreeMap<usize, Vec<f64>>,
    pub hotspot_rise: BTreeMap<usize, Vec<f64>>,
    pub hotspot: BTreeMap<usize, Vec<f64>>,
    /// Generation cost with the exact quadratic terms.
    pub objective: f64,
    /// Value of the piecewise-linear model objective.
    pub model_objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_solves: usize,
    pub wall_time_s: f64,
}

/// Exact generation cost of a dispatch, summed over periods.
pub fn dispatch_cost(case: &CaseData, dispatch: &BTreeMap<usize, Vec<f64>>) -> f64 {
    let mut total = 0.0;
    for (id, series) in dispatch {
        let g = case.generator(*id).expect("plan generator exists");
        total += series.iter().map(|&p| g.c0 + g.c1 * p + g.c2 * p * p).sum::<f64>();
    }
    total
}

impl MitigationPlan {
    /// Reads the plan out of an optimal primal vector of `model`.
    pub fn from_primal(case: &CaseData, model: &OtsModel, x: &[f64], solver: &str, stats: SolveStats) -> Self {
        let round = |v: f64| if v > 0.5 { 1u8 } else { 0u8 };
        let mut z = BTreeMap::new();
        let mut z_nom = BTreeMap::new();
        for br in &case.branches {
            z_nom.insert(br.index, br.br_status as u8);
            z.insert(br.index, br.br_status as u8);
        }
        for (k, &id) in model.switchable.iter().enumerate() {
            z.insert(id, round(x[model.z[k]]));
        }
        let series = |pick: &dyn Fn(&crate::model::PeriodCols) -> usize| -> Vec<f64> {
            model.cols.iter().map(|pc| x[pick(pc)]).collect()
        };

        let mut dispatch = BTreeMap::new();
        for (k, &g) in model.generators.iter().enumerate() {
            dispatch.insert(g, series(&|pc| pc.pg[k]));
        }
        let mut flows = BTreeMap::new();
        for (k, &b) in model.branches.iter().enumerate() {
            flows.insert(b, series(&|pc| pc.flow[k]));
        }
        let mut angles = BTreeMap::new();
        for (k, &b) in model.buses.iter().enumerate() {
            angles.insert(b, series(&|pc| pc.theta[k]));
        }
        let mut gic = BTreeMap::new();
        for (k, e) in model.dc_edges.iter().enumerate() {
            gic.insert(e.gmd_branch, series(&|pc| pc.i[k]));
        }
        let (mut i_eff, mut top_oil_rise, mut hotspot_rise, mut hotspot) =
            (BTreeMap::new(), BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        for (k, tr) in model.transformers.iter().enumerate() {
            let delta = series(&|pc| pc.delta[k]);
            let eta = series(&|pc| pc.eta[k]);
            hotspot.insert(tr.branch, delta.iter().zip(&eta).map(|(d, e)| tr.ambient + d + e).collect());
            i_eff.insert(tr.branch, series(&|pc| pc.i_eff[k]));
            top_oil_rise.insert(tr.branch, delta);
            hotspot_rise.insert(tr.branch, eta);
        }

        let objective = dispatch_cost(case, &dispatch);
        let model_objective = model.lp.objective(x);
        Self {
            solver: solver.to_string(),
            z,
            z_nom,
            dt: model.dt,
            times: model.periods.iter().map(|p| p.t_mid).collect(),
            dispatch,
            flows,
            angles,
            gic,
            i_eff,
            top_oil_rise,
            hotspot_rise,
            hotspot,
            objective,
            model_objective,
            bound: stats.bound,
            gap: stats.gap,
            nodes: stats.nodes,
            lp_solves: stats.lp_solves,
            wall_time_s: stats.wall_time_s,
        }
    }

    /// Binary assignment in model order.
    pub fn assignment(&self, model: &OtsModel) -> Vec<bool> {
        model.switchable.iter().map(|id| self.z.get(id) == Some(&1)).collect()
    }

    /// Closed switchable branches as a topology map for the dc solver.
    pub fn topology(&self) -> BTreeMap<usize, bool> {
        self.z.iter().map(|(&id, &s)| (id, s == 1)).collect()
    }

    /// Period with the largest total series voltage, field magnitude
    /// breaking ties, first period on exact ties.
    pub fn peak_period(model: &OtsModel) -> usize {
        let mut best = (0, (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for (k, p) in model.periods.iter().enumerate() {
            let emf: f64 = model.dc_edges.iter().map(|d| d.emf[k].abs()).sum();
            let key = (emf, p.field.e_mag);
            if key > best.1 {
                best = (k, key);
            }
        }
        best.0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn kind_label(case: &CaseData, branch: usize) -> &'static str {
    match case.branch_kind(branch) {
        BranchKind::Transformer => "xf",
        BranchKind::Line => "line",
        BranchKind::SeriesCap => "series_cap",
    }
}

/// Signed dc current reported for an ac branch: the line's own dc branch, or
/// the primary winding (high side, series for autotransformers).
pub fn reported_current(case: &CaseData, plan: &MitigationPlan, branch: usize, period: usize) -> f64 {
    let winding = case.branch_gmd_for(branch).and_then(|row| match row.config {
        WindingConfig::GwyeGwyeAuto => row.gmd_br_se,
        WindingConfig::GwyeDelta | WindingConfig::GwyeGwye => row.gmd_br_hi,
        _ => None,
    });
    let id = match case.branch_kind(branch) {
        BranchKind::Transformer => winding,
        _ => case.gmd_branches.iter().find(|g| g.parent == branch).map(|g| g.index),
    };
    id.and_then(|id| plan.gic.get(&id))
        .and_then(|s| s.get(period).copied())
        .unwrap_or(0.0)
}

/// Four decimals without a sign on values that round to zero.
fn fixed4(x: f64) -> String {
    let r = (x * 1e4).round() / 1e4;
    format!("{:.4}", if r == 0.0 { 0.0 } else { r })
}

/// `i,j,ckt,type,z_nom,z,p_ij,I_e` at the given period, one row per ac
/// branch in case order.
pub fn write_status_csv(out: impl Write, case: &CaseData, plan: &MitigationPlan, period: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "ckt", "type", "z_nom", "z", "p_ij", "I_e"])?;
    for br in &case.branches {
        let p = plan.flows.get(&br.index).and_then(|s| s.get(period)).copied().unwrap_or(0.0);
        let p = if plan.z.get(&br.index) == Some(&1) { p } else { 0.0 };
        w.write_record([
            br.f_bus.to_string(),
            br.t_bus.to_string(),
            br.ckt.to_string(),
            kind_label(case, br.index).to_string(),
            plan.z_nom[&br.index].to_string(),
            plan.z[&br.index].to_string(),
            fixed4(p),
            fixed4(reported_current(case, plan, br.index, period)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
