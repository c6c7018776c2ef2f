//! Synthetic generator step-up transformers for cases that omit them.
//!
//! Each generator whose bus touches no transformer gets a grounded-wye /
//! delta unit: a new ac terminal bus, a transformer branch from the generator
//! bus to that terminal, and a dc winding from the generator bus' dc node to
//! the substation neutral. Only the high-side winding carries GIC.

use std::collections::BTreeSet;

use super::{AcBranch, BranchGmd, BranchKind, BranchThermal, Bus, BusGmd, BusType, CaseData, GmdBranch, GmdBus, WindingConfig};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GsuOptions {
    /// High-side winding resistance, ohms per phase.
    pub winding_r: f64,
    /// Grounding conductance for a substation neutral that has to be created.
    pub ground_g: f64,
    pub terminal_kv: f64,
    pub gmd_k: f64,
    pub reactance: f64,
    /// Thermal parameters copied onto each synthetic unit.
    pub thermal: BranchThermal,
}

impl Default for GsuOptions {
    fn default() -> Self {
        Self {
            winding_r: 0.1,
            ground_g: 5.0,
            terminal_kv: 20.0,
            gmd_k: 1.793,
            reactance: 0.01,
            thermal: BranchThermal {
                branch: 0,
                xfmr: true,
                temp_amb: 25.0,
                hs_inst_lim: 280.0,
                hs_avg_lim: 240.0,
                hs_rated: 150.0,
                to_time_c: 71.0,
                to_rated: 75.0,
                to_init: 0.0,
                to_inited: false,
                hs_coeff: 0.63,
                hotspot_limit: None,
            },
        }
    }
}

pub fn estimate_missing_gsu(case: &CaseData, opts: &GsuOptions) -> Result<CaseData> {
    let with_xfmr: BTreeSet<usize> = case
        .transformers()
        .flat_map(|r| [r.hi_bus, r.lo_bus])
        .collect();
    let missing: Vec<_> = case
        .generators
        .iter()
        .filter(|g| !with_xfmr.contains(&g.gen_bus))
        .cloned()
        .collect();
    if missing.is_empty() {
        return Ok(case.clone());
    }

    let mut out = case.clone();
    let last_bus = case.buses.iter().map(|b| b.id).max().unwrap_or(0);
    let last_branch = case.branches.iter().map(|b| b.index).max().unwrap_or(0);
    let mut next_gmd_bus = case.gmd_buses.iter().map(|b| b.index).max().unwrap_or(0);
    let mut next_gmd_branch = case.gmd_branches.iter().map(|b| b.index).max().unwrap_or(0);

    for (k, gen) in missing.into_iter().enumerate() {
        let bus = case.bus(gen.gen_bus).expect("validated reference").clone();

        let node = match out.gmd_buses.iter().find(|b| b.parent == bus.id && b.g_gnd == 0.0) {
            Some(b) => b.index,
            None => {
                next_gmd_bus += 1;
                out.gmd_buses.push(GmdBus {
                    index: next_gmd_bus,
                    parent: bus.id,
                    status: true,
                    g_gnd: 0.0,
                    name: format!("dc_bus{}", bus.id),
                });
                next_gmd_bus
            }
        };
        let neutral = match out.gmd_buses.iter().find(|b| b.parent == bus.id && b.g_gnd > 0.0) {
            Some(b) => b.index,
            None => {
                next_gmd_bus += 1;
                out.gmd_buses.push(GmdBus {
                    index: next_gmd_bus,
                    parent: bus.id,
                    status: true,
                    g_gnd: opts.ground_g,
                    name: format!("dc_sub{}", bus.id),
                });
                next_gmd_bus
            }
        };

        let terminal = last_bus + k + 1;
        out.buses.push(Bus {
            id: terminal,
            bus_type: BusType::PQ,
            pd: 0.0,
            qd: 0.0,
            gs: 0.0,
            bs: 0.0,
            base_kv: opts.terminal_kv,
            vmin: bus.vmin,
            vmax: bus.vmax,
        });
        if let Some(c) = case.coordinates(bus.id) {
            out.bus_gmd.push(BusGmd {
                bus: terminal,
                lat: c.lat,
                lon: c.lon,
            });
        }

        let branch = last_branch + k + 1;
        out.branches.push(AcBranch {
            index: branch,
            f_bus: bus.id,
            t_bus: terminal,
            br_r: 0.0,
            br_x: opts.reactance,
            br_b: 0.0,
            tap: 1.0,
            rate_a: gen.pmax.max(gen.pmin.abs()).max(1e-3),
            angle_lim: std::f64::consts::FRAC_PI_3,
            angle_bigm: std::f64::consts::PI,
            switchable: false,
            br_status: true,
            ckt: 1,
        });

        next_gmd_branch += 1;
        out.gmd_branches.push(GmdBranch {
            index: next_gmd_branch,
            f_bus: node,
            t_bus: neutral,
            parent: branch,
            status: true,
            br_r: opts.winding_r,
            br_v: 0.0,
            len_km: 0.0,
            name: format!("gsu_gen{}_hi", gen.index),
        });
        out.branch_gmd.push(BranchGmd {
            branch,
            hi_bus: bus.id,
            lo_bus: terminal,
            gmd_br_hi: Some(next_gmd_branch),
            gmd_br_lo: None,
            gmd_k: Some(opts.gmd_k),
            gmd_br_se: None,
            gmd_br_co: None,
            base_mva: Some(case.base_mva),
            dispatch: 0.0,
            kind: BranchKind::Transformer,
            config: WindingConfig::GwyeDelta,
            turns_ratio: None,
            gic_bound: None,
        });
        out.thermal.push(BranchThermal {
            branch,
            ..opts.thermal.clone()
        });
    }
    CaseData::from_tables(out)
}
