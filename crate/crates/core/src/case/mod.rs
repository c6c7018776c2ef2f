//! Network description: ac tables plus the five GMD tables.
//!
//! The on-disk form is a single JSON document with top-level arrays
//! `bus, gen, branch, gmd_bus, gmd_branch, branch_gmd, branch_thermal, bus_gmd`
//! and a scalar `baseMVA`. Integer references use `-1` for "absent".
//!
//! Only transformer rows of `branch_thermal` are kept; rows with `xfmr = 0`
//! are placeholders and are dropped on parse.

mod gsu;
mod serde_util;
mod types;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use gsu::{estimate_missing_gsu, GsuOptions};
pub use types::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseData {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "baseMVA")]
    pub base_mva: f64,
    #[serde(rename = "bus")]
    pub buses: Vec<Bus>,
    #[serde(rename = "gen", default)]
    pub generators: Vec<Generator>,
    #[serde(rename = "branch", default)]
    pub branches: Vec<AcBranch>,
    #[serde(rename = "gmd_bus", default)]
    pub gmd_buses: Vec<GmdBus>,
    #[serde(rename = "gmd_branch", default)]
    pub gmd_branches: Vec<GmdBranch>,
    #[serde(default)]
    pub branch_gmd: Vec<BranchGmd>,
    #[serde(rename = "branch_thermal", default)]
    pub thermal: Vec<BranchThermal>,
    #[serde(default)]
    pub bus_gmd: Vec<BusGmd>,
    #[serde(skip)]
    index: CaseIndex,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct CaseIndex {
    bus: BTreeMap<usize, usize>,
    gen: BTreeMap<usize, usize>,
    branch: BTreeMap<usize, usize>,
    gmd_bus: BTreeMap<usize, usize>,
    gmd_branch: BTreeMap<usize, usize>,
    branch_gmd: BTreeMap<usize, usize>,
    thermal: BTreeMap<usize, usize>,
    bus_gmd: BTreeMap<usize, usize>,
}

/// Parses and validates a case document.
pub fn parse_case(text: &str) -> Result<CaseData> {
    let raw: CaseData = serde_json::from_str(text).map_err(|e| Error::Structure(e.to_string()))?;
    CaseData::from_tables(raw)
}

/// Writes the canonical JSON form. Every implicit index is made explicit.
pub fn serialize_case(case: &CaseData) -> String {
    serde_json::to_string_pretty(case).expect("case data serializes")
}

impl CaseData {
    /// Empty, unvalidated tables to be filled and passed to [`Self::from_tables`].
    pub fn empty(name: &str, base_mva: f64) -> Self {
        Self {
            name: name.to_string(),
            base_mva,
            buses: Vec::new(),
            generators: Vec::new(),
            branches: Vec::new(),
            gmd_buses: Vec::new(),
            gmd_branches: Vec::new(),
            branch_gmd: Vec::new(),
            thermal: Vec::new(),
            bus_gmd: Vec::new(),
            index: CaseIndex::default(),
        }
    }

    /// Fills row-position defaults, drops placeholder thermal rows, builds the
    /// lookup index and validates every table.
    pub fn from_tables(mut raw: CaseData) -> Result<Self> {
        raw.fill_defaults();
        raw.reindex()?;
        validate::validate(&raw)?;
        Ok(raw)
    }

    fn fill_defaults(&mut self) {
        for (k, g) in self.generators.iter_mut().enumerate() {
            if g.index == 0 {
                g.index = k + 1;
            }
        }
        for (k, br) in self.branches.iter_mut().enumerate() {
            if br.index == 0 {
                br.index = k + 1;
            }
        }
        for (k, b) in self.gmd_buses.iter_mut().enumerate() {
            if b.index == 0 {
                b.index = k + 1;
            }
        }
        for (k, b) in self.gmd_branches.iter_mut().enumerate() {
            if b.index == 0 {
                b.index = k + 1;
            }
        }
        let branch_ids: Vec<usize> = self.branches.iter().map(|b| b.index).collect();
        let bus_ids: Vec<usize> = self.buses.iter().map(|b| b.id).collect();
        for (k, row) in self.branch_gmd.iter_mut().enumerate() {
            if row.branch == 0 {
                row.branch = branch_ids.get(k).copied().unwrap_or(0);
            }
        }
        for (k, row) in self.thermal.iter_mut().enumerate() {
            if row.branch == 0 {
                row.branch = branch_ids.get(k).copied().unwrap_or(0);
            }
        }
        self.thermal.retain(|row| row.xfmr);
        for (k, row) in self.bus_gmd.iter_mut().enumerate() {
            if row.bus == 0 {
                row.bus = bus_ids.get(k).copied().unwrap_or(0);
            }
        }

        // Circuit numbers count parallel branches between the same bus pair.
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut used: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for br in &self.branches {
            if br.ckt != 0 {
                let key = (br.f_bus.min(br.t_bus), br.f_bus.max(br.t_bus));
                used.entry(key).or_default().push(br.ckt);
            }
        }
        for br in self.branches.iter_mut() {
            if br.ckt == 0 {
                let key = (br.f_bus.min(br.t_bus), br.f_bus.max(br.t_bus));
                let next = seen.entry(key).or_insert(0);
                let taken = used.entry(key).or_default();
                loop {
                    *next += 1;
                    if !taken.contains(next) {
                        break;
                    }
                }
                br.ckt = *next;
                taken.push(*next);
            }
        }
    }

    fn reindex(&mut self) -> Result<()> {
        fn build<T>(
            table: &'static str,
            rows: &[T],
            key: impl Fn(&T) -> usize,
        ) -> Result<BTreeMap<usize, usize>> {
            let mut map = BTreeMap::new();
            for (k, row) in rows.iter().enumerate() {
                if map.insert(key(row), k).is_some() {
                    return Err(Error::Invariant {
                        table,
                        row: k + 1,
                        msg: format!("duplicate id {}", key(row)),
                    });
                }
            }
            Ok(map)
        }
        self.index = CaseIndex {
            bus: build("bus", &self.buses, |b| b.id)?,
            gen: build("gen", &self.generators, |g| g.index)?,
            branch: build("branch", &self.branches, |b| b.index)?,
            gmd_bus: build("gmd_bus", &self.gmd_buses, |b| b.index)?,
            gmd_branch: build("gmd_branch", &self.gmd_branches, |b| b.index)?,
            branch_gmd: build("branch_gmd", &self.branch_gmd, |r| r.branch)?,
            thermal: build("branch_thermal", &self.thermal, |r| r.branch)?,
            bus_gmd: build("bus_gmd", &self.bus_gmd, |r| r.bus)?,
        };
        Ok(())
    }

    pub fn bus(&self, id: usize) -> Option<&Bus> {
        self.index.bus.get(&id).map(|&k| &self.buses[k])
    }

    pub fn generator(&self, id: usize) -> Option<&Generator> {
        self.index.gen.get(&id).map(|&k| &self.generators[k])
    }

    pub fn branch(&self, id: usize) -> Option<&AcBranch> {
        self.index.branch.get(&id).map(|&k| &self.branches[k])
    }

    pub fn gmd_bus(&self, id: usize) -> Option<&GmdBus> {
        self.index.gmd_bus.get(&id).map(|&k| &self.gmd_buses[k])
    }

    pub fn gmd_branch(&self, id: usize) -> Option<&GmdBranch> {
        self.index.gmd_branch.get(&id).map(|&k| &self.gmd_branches[k])
    }

    pub fn branch_gmd_for(&self, branch: usize) -> Option<&BranchGmd> {
        self.index.branch_gmd.get(&branch).map(|&k| &self.branch_gmd[k])
    }

    pub fn thermal_for(&self, branch: usize) -> Option<&BranchThermal> {
        self.index.thermal.get(&branch).map(|&k| &self.thermal[k])
    }

    pub fn coordinates(&self, bus: usize) -> Option<&BusGmd> {
        self.index.bus_gmd.get(&bus).map(|&k| &self.bus_gmd[k])
    }

    pub fn branch_kind(&self, branch: usize) -> BranchKind {
        self.branch_gmd_for(branch).map_or(BranchKind::Line, |r| r.kind)
    }

    /// Transformer rows of `branch_gmd`, in table order.
    pub fn transformers(&self) -> impl Iterator<Item = &BranchGmd> {
        self.branch_gmd.iter().filter(|r| r.is_transformer())
    }

    /// Turns ratio `α` for multi-winding configurations. Explicit values win;
    /// otherwise `V_hi / V_lo` for two-winding units and `V_hi / V_lo - 1`
    /// (series over common turns) for autotransformers.
    pub fn turns_ratio(&self, row: &BranchGmd) -> Option<f64> {
        if let Some(alpha) = row.turns_ratio {
            return Some(alpha);
        }
        let hi = self.bus(row.hi_bus)?.base_kv;
        let lo = self.bus(row.lo_bus)?.base_kv;
        match row.config {
            WindingConfig::GwyeGwye => Some(hi / lo),
            WindingConfig::GwyeGwyeAuto => Some(hi / lo - 1.0),
            _ => None,
        }
    }

    /// Effective-GIC bound for a transformer, amperes.
    pub fn gic_bound(&self, branch: usize) -> f64 {
        self.branch_gmd_for(branch)
            .and_then(|r| r.gic_bound)
            .unwrap_or(f64::INFINITY)
    }

    pub fn hotspot_limit(&self, branch: usize) -> Option<f64> {
        self.thermal_for(branch).map(BranchThermal::limit)
    }

    pub fn slack_bus(&self) -> Option<&Bus> {
        self.buses.iter().find(|b| b.bus_type == BusType::Slack)
    }

    pub fn has_dc_network(&self) -> bool {
        !self.gmd_buses.is_empty()
    }
}
