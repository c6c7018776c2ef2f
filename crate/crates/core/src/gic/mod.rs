//! Quasi-dc network: assembly of the nodal system, solve, effective GIC.
//!
//! Sign conventions: a branch from `f` to `t` carries
//! `I = a (V_f - V_t + V_src)`, and at every node the current arriving
//! through branches equals the current leaving to ground, `a_i V_i`.

mod geo;
mod io;
mod solve;

use std::collections::BTreeMap;

pub use geo::{branch_lengths, branch_lengths_with, induced_voltage, DistanceModel};
pub use io::{write_branch_csv, write_bus_csv};
pub use solve::{effective_current, effective_gic, kcl_residual, solve_dc, solve_dc_with, solve_gic, SolveOptions};

use crate::case::{BranchKind, CaseData};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::scenario::FieldAt;

/// Source of the series voltages driving the dc network.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldInput {
    /// Use `br_v` from the case file as given.
    CaseVoltages,
    /// Project a uniform field; per-branch overrides take precedence.
    Field(FieldAt),
}

impl FieldInput {
    pub fn uniform(e_mag: f64, e_dir_deg: f64) -> Self {
        FieldInput::Field(FieldAt::uniform(e_mag, e_dir_deg))
    }
}

/// Open/closed state per ac branch id. Branches not listed keep `br_status`.
pub type Topology = BTreeMap<usize, bool>;

#[derive(Debug, Clone, PartialEq)]
pub struct DcEdge<T> {
    /// GMD branch id.
    pub branch: usize,
    /// Matrix rows of the endpoints.
    pub from: usize,
    pub to: usize,
    pub admittance: T,
    /// Series source voltage, volts.
    pub emf: T,
    /// Controlling ac branch.
    pub parent: usize,
}

/// Nodal form `G V = J` of the dc network at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSystem<T> {
    /// Row → GMD bus id.
    pub node_ids: Vec<usize>,
    /// GMD bus id → row.
    pub index: BTreeMap<usize, usize>,
    /// Dense row-major `n × n` conductance matrix, siemens.
    pub conductance: Vec<T>,
    pub grounding: Vec<T>,
    /// Norton injections, amperes.
    pub injection: Vec<T>,
    pub edges: Vec<DcEdge<T>>,
    /// GMD branches left out of the solve (out of service, switched off,
    /// series capacitor, or touching an out-of-service node).
    pub excluded: Vec<usize>,
    /// GMD buses with `status = 0`; their voltage is reported as zero.
    pub inactive_nodes: Vec<usize>,
}

impl<T: Scalar> DcSystem<T> {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn g(&self, i: usize, j: usize) -> T {
        self.conductance[i * self.len() + j]
    }
}

/// Dc voltages and currents at one instant. Currents are per phase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GicSolution<T> {
    pub t_min: f64,
    /// GMD bus id → volts.
    pub node_voltages: BTreeMap<usize, T>,
    /// GMD branch id → amperes, `f_bus` to `t_bus`. Excluded branches carry 0.
    pub branch_currents: BTreeMap<usize, T>,
    /// AC transformer branch id → effective GIC, amperes.
    pub effective: BTreeMap<usize, T>,
}

impl<T> GicSolution<T> {
    pub fn at(mut self, t_min: f64) -> Self {
        self.t_min = t_min;
        self
    }
}

fn branch_closed(case: &CaseData, topology: Option<&Topology>, branch: usize) -> bool {
    let nominal = case.branch(branch).is_some_and(|b| b.br_status);
    topology.and_then(|t| t.get(&branch).copied()).unwrap_or(nominal)
}

/// Series voltage of one GMD branch under `field`, volts.
pub fn branch_emf(case: &CaseData, field: &FieldInput, gmd_branch: usize) -> Result<f64> {
    let br = case.gmd_branch(gmd_branch).expect("validated gmd branch id");
    match field {
        FieldInput::CaseVoltages => Ok(br.br_v),
        FieldInput::Field(f) => {
            if let Some(&v) = f.overrides.get(&gmd_branch) {
                return Ok(v);
            }
            if case.branch_kind(br.parent) == BranchKind::Transformer || f.e_mag == 0.0 {
                return Ok(0.0);
            }
            let (l_n, l_e) = branch_lengths(case, br)?;
            Ok(induced_voltage(f.e_mag, f.e_dir_deg, l_n, l_e))
        }
    }
}

/// Builds the nodal system for the given field and ac topology.
pub fn assemble<T: Scalar>(case: &CaseData, field: &FieldInput, topology: Option<&Topology>) -> Result<DcSystem<T>> {
    let mut node_ids = Vec::new();
    let mut inactive_nodes = Vec::new();
    for b in &case.gmd_buses {
        if b.status {
            node_ids.push(b.index);
        } else {
            inactive_nodes.push(b.index);
        }
    }
    node_ids.sort_unstable();
    let index: BTreeMap<usize, usize> = node_ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let n = node_ids.len();

    let mut grounding = vec![T::zero(); n];
    for b in case.gmd_buses.iter().filter(|b| b.status) {
        grounding[index[&b.index]] = T::of(b.g_gnd);
    }

    let mut edges = Vec::new();
    let mut excluded = Vec::new();
    for br in &case.gmd_branches {
        let (Some(&from), Some(&to)) = (index.get(&br.f_bus), index.get(&br.t_bus)) else {
            excluded.push(br.index);
            continue;
        };
        let active = br.status
            && branch_closed(case, topology, br.parent)
            && case.branch_kind(br.parent) != BranchKind::SeriesCap;
        if !active {
            excluded.push(br.index);
            continue;
        }
        edges.push(DcEdge {
            branch: br.index,
            from,
            to,
            admittance: T::of(br.admittance()),
            emf: T::of(branch_emf(case, field, br.index)?),
            parent: br.parent,
        });
    }

    let mut conductance = vec![T::zero(); n * n];
    let mut injection = vec![T::zero(); n];
    for (i, &a) in grounding.iter().enumerate() {
        conductance[i * n + i] = a;
    }
    for e in &edges {
        let (f, t, a) = (e.from, e.to, e.admittance);
        conductance[f * n + f] = conductance[f * n + f] + a;
        conductance[t * n + t] = conductance[t * n + t] + a;
        conductance[f * n + t] = conductance[f * n + t] - a;
        conductance[t * n + f] = conductance[t * n + f] - a;
        let src = a * e.emf;
        injection[f] = injection[f] - src;
        injection[t] = injection[t] + src;
    }

    Ok(DcSystem {
        node_ids,
        index,
        conductance,
        grounding,
        injection,
        edges,
        excluded,
        inactive_nodes,
    })
}
