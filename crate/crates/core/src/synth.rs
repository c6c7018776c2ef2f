//! Random valid cases for property tests and solver cross-checks.
//!
//! [`random_dc_case`] exercises the quasi-dc solver on every winding
//! configuration; [`random_switching_case`] produces small networks where
//! GIC heating and dispatch cost pull against each other.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::case::{
    AcBranch, BranchGmd, BranchKind, BranchThermal, Bus, BusGmd, BusType, CaseData, Generator, GmdBranch, GmdBus,
    WindingConfig,
};
use crate::gic::DistanceModel;
use crate::scenario::{make_ramp_scenario, FieldScenario};

fn bus(id: usize, bus_type: BusType, pd: f64, base_kv: f64) -> Bus {
    Bus {
        id,
        bus_type,
        pd,
        qd: 0.3 * pd,
        gs: 0.0,
        bs: 0.0,
        base_kv,
        vmin: 0.9,
        vmax: 1.1,
    }
}

fn generator(gen_bus: usize, pmax: f64, c1: f64, c2: f64) -> Generator {
    Generator {
        index: 0,
        gen_bus,
        pg: 0.0,
        vg: 1.0,
        pmin: 0.0,
        pmax,
        qmin: -pmax,
        qmax: pmax,
        c0: 0.0,
        c1,
        c2,
        gen_status: true,
    }
}

fn ac_branch(index: usize, f_bus: usize, t_bus: usize, br_x: f64, rate_a: f64, switchable: bool) -> AcBranch {
    AcBranch {
        index,
        f_bus,
        t_bus,
        br_r: 0.1 * br_x,
        br_x,
        br_b: 0.0,
        tap: 1.0,
        rate_a,
        angle_lim: std::f64::consts::FRAC_PI_3,
        angle_bigm: std::f64::consts::PI,
        switchable,
        br_status: true,
        ckt: 0,
    }
}

fn line_gmd(branch: usize, hi_bus: usize, lo_bus: usize) -> BranchGmd {
    BranchGmd {
        branch,
        hi_bus,
        lo_bus,
        gmd_br_hi: None,
        gmd_br_lo: None,
        gmd_k: None,
        gmd_br_se: None,
        gmd_br_co: None,
        base_mva: None,
        dispatch: 0.0,
        kind: BranchKind::Line,
        config: WindingConfig::None,
        turns_ratio: None,
        gic_bound: None,
    }
}

fn thermal(branch: usize, tau: f64, to_rated: f64, hs_coeff: f64, limit: f64) -> BranchThermal {
    BranchThermal {
        branch,
        xfmr: true,
        temp_amb: 25.0,
        hs_inst_lim: limit,
        hs_avg_lim: limit.min(240.0),
        hs_rated: 150.0,
        to_time_c: tau,
        to_rated,
        to_init: 0.0,
        to_inited: false,
        hs_coeff,
        hotspot_limit: None,
    }
}

struct Tables {
    case: CaseData,
}

impl Tables {
    fn gmd_bus(&mut self, parent: usize, g_gnd: f64, name: String) -> usize {
        let index = self.case.gmd_buses.len() + 1;
        self.case.gmd_buses.push(GmdBus {
            index,
            parent,
            status: true,
            g_gnd,
            name,
        });
        index
    }

    fn gmd_branch(&mut self, f_bus: usize, t_bus: usize, parent: usize, br_r: f64, len_km: f64) -> usize {
        let index = self.case.gmd_branches.len() + 1;
        self.case.gmd_branches.push(GmdBranch {
            index,
            f_bus,
            t_bus,
            parent,
            status: true,
            br_r,
            br_v: 0.0,
            len_km,
            name: format!("dc{index}"),
        });
        index
    }

    fn next_branch(&self) -> usize {
        self.case.branches.len() + 1
    }

    fn length(&self, a: usize, b: usize) -> f64 {
        let find = |id| self.case.bus_gmd.iter().find(|c| c.bus == id).expect("coordinates first");
        let (n, e) = DistanceModel::default().displacement(find(a), find(b));
        n.hypot(e)
    }
}

/// Spanning tree over `n` nodes plus `extra` distinct chords.
fn random_edges<R: Rng>(rng: &mut R, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((rng.gen_range(0..k), k));
    }
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|p| !edges.contains(p))
        .collect();
    pairs.shuffle(rng);
    edges.extend(pairs.into_iter().take(extra));
    edges
}

/// Random grid with at most `max_dc_nodes` dc nodes: substations joined by
/// lines, transformers of every winding configuration, occasionally an
/// ungrounded neutral.
pub fn random_dc_case<R: Rng>(rng: &mut R, max_dc_nodes: usize) -> CaseData {
    let subs = rng.gen_range(2..=(max_dc_nodes / 3).max(2));
    let mut t = Tables {
        case: CaseData::empty("random_dc", 100.0),
    };
    let mut hi_node = Vec::new();
    let mut hi_bus = Vec::new();
    for s in 0..subs {
        let (lat, lon) = (rng.gen_range(33.0..37.0), rng.gen_range(-90.0..-84.0));
        let hb = 2 * s + 1;
        let kind = if s == 0 { BusType::Slack } else { BusType::PQ };
        t.case.buses.push(bus(hb, kind, 0.0, 345.0));
        t.case.bus_gmd.push(BusGmd { bus: hb, lat, lon });
        let g = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.2..10.0) };
        let neutral = t.gmd_bus(hb, g, format!("sub{s}"));
        let hn = t.gmd_bus(hb, 0.0, format!("bus{hb}"));
        hi_node.push(hn);
        hi_bus.push(hb);

        if rng.gen_bool(0.7) {
            let lb = hb + 1;
            t.case.buses.push(bus(lb, BusType::PQ, 0.0, 138.0));
            t.case.bus_gmd.push(BusGmd { bus: lb, lat, lon });
            let br = t.next_branch();
            t.case.branches.push(ac_branch(br, hb, lb, 0.02, 10.0, false));
            let config = *[
                WindingConfig::GwyeDelta,
                WindingConfig::GwyeGwye,
                WindingConfig::GwyeGwyeAuto,
                WindingConfig::DeltaDelta,
            ]
            .choose(rng)
            .expect("nonempty");
            let mut row = line_gmd(br, hb, lb);
            row.kind = BranchKind::Transformer;
            row.config = config;
            row.gmd_k = Some(1.8);
            row.base_mva = Some(100.0);
            match config {
                WindingConfig::GwyeDelta => row.gmd_br_hi = Some(t.gmd_branch(hn, neutral, br, rng.gen_range(0.05..0.6), 0.0)),
                WindingConfig::GwyeGwye => {
                    let ln = t.gmd_bus(lb, 0.0, format!("bus{lb}"));
                    row.gmd_br_hi = Some(t.gmd_branch(hn, neutral, br, rng.gen_range(0.05..0.6), 0.0));
                    row.gmd_br_lo = Some(t.gmd_branch(ln, neutral, br, rng.gen_range(0.05..0.6), 0.0));
                }
                WindingConfig::GwyeGwyeAuto => {
                    let ln = t.gmd_bus(lb, 0.0, format!("bus{lb}"));
                    row.gmd_br_se = Some(t.gmd_branch(hn, ln, br, rng.gen_range(0.05..0.6), 0.0));
                    row.gmd_br_co = Some(t.gmd_branch(ln, neutral, br, rng.gen_range(0.05..0.6), 0.0));
                }
                _ => {}
            }
            t.case.branch_gmd.push(row);
            t.case.thermal.push(thermal(br, 71.0, 75.0, 0.63, 280.0));
        }
    }
    let extra = rng.gen_range(0..=subs / 2);
    for (a, b) in random_edges(rng, subs, extra) {
        let br = t.next_branch();
        let len = t.length(hi_bus[a], hi_bus[b]);
        t.case.branches.push(ac_branch(br, hi_bus[a], hi_bus[b], 0.05, 10.0, false));
        t.case.branch_gmd.push(line_gmd(br, hi_bus[a], hi_bus[b]));
        let r = 0.1 + rng.gen_range(0.01..0.05) * len;
        t.gmd_branch(hi_node[a], hi_node[b], br, r, len);
    }
    t.case.generators.push(generator(1, 10.0, 10.0, 0.1));
    CaseData::from_tables(t.case).expect("generated case is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingCaseOptions {
    pub max_switchable: usize,
    pub max_periods: usize,
    pub dt: f64,
}

impl Default for SwitchingCaseOptions {
    fn default() -> Self {
        Self {
            max_switchable: 8,
            max_periods: 12,
            dt: 15.0,
        }
    }
}

/// Small network of substations, each with a high-voltage bus, a grounded
/// wye-delta transformer and a generator or load on the low side, joined by
/// switchable lines; plus a ramp scenario of random strength and direction.
pub fn random_switching_case<R: Rng>(rng: &mut R, opts: SwitchingCaseOptions) -> (CaseData, FieldScenario) {
    let max_subs = (opts.max_switchable + 1).clamp(3, 6);
    let subs = rng.gen_range(3..=max_subs);
    let chords = rng.gen_range(0..=opts.max_switchable.saturating_sub(subs - 1).min(3));
    let mut t = Tables {
        case: CaseData::empty("random_switching", 100.0),
    };
    let gens = 2;
    let mut hi_node = Vec::new();
    let mut total_load = 0.0;
    let mut loads = Vec::new();
    for s in 0..subs {
        if s >= gens {
            let pd: f64 = rng.gen_range(0.5..2.0);
            loads.push(pd);
            total_load += pd;
        }
    }
    for s in 0..subs {
        let (lat, lon) = (rng.gen_range(35.0..36.5), rng.gen_range(-89.0..-85.0));
        let (hb, lb) = (2 * s + 1, 2 * s + 2);
        let kind = if s == 0 { BusType::Slack } else { BusType::PQ };
        t.case.buses.push(bus(hb, kind, 0.0, 345.0));
        let pd = if s >= gens { loads[s - gens] } else { 0.0 };
        t.case.buses.push(bus(lb, BusType::PQ, pd, 20.0));
        t.case.bus_gmd.push(BusGmd { bus: hb, lat, lon });
        t.case.bus_gmd.push(BusGmd { bus: lb, lat, lon });
        let neutral = t.gmd_bus(hb, rng.gen_range(1.0..10.0), format!("sub{s}"));
        let hn = t.gmd_bus(hb, 0.0, format!("bus{hb}"));
        hi_node.push(hn);

        let through = if s < gens { 1.5 * total_load } else { pd };
        let br = t.next_branch();
        t.case.branches.push(ac_branch(br, hb, lb, 0.01, 1.2 * through, false));
        let mut row = line_gmd(br, hb, lb);
        row.kind = BranchKind::Transformer;
        row.config = WindingConfig::GwyeDelta;
        row.gmd_k = Some(1.8);
        row.base_mva = Some(100.0);
        row.gmd_br_hi = Some(t.gmd_branch(hn, neutral, br, rng.gen_range(0.1..0.5), 0.0));
        t.case.branch_gmd.push(row);
        t.case.thermal.push(thermal(
            br,
            rng.gen_range(30.0..90.0),
            rng.gen_range(65.0..75.0),
            rng.gen_range(0.3..1.0),
            rng.gen_range(150.0..340.0),
        ));
        if s < gens {
            let pmax = if s == 0 { 1.5 * total_load } else { total_load };
            let c1 = if s == 0 { rng.gen_range(5.0..15.0) } else { rng.gen_range(15.0..30.0) };
            t.case.generators.push(generator(lb, pmax, c1, rng.gen_range(0.0..2.0)));
        }
    }
    for (a, b) in random_edges(rng, subs, chords) {
        let (ha, hb) = (2 * a + 1, 2 * b + 1);
        let br = t.next_branch();
        let len = t.length(ha, hb);
        let x = (len * 2e-4).max(0.005);
        t.case.branches.push(ac_branch(br, ha, hb, x, rng.gen_range(0.5..2.0) * total_load, true));
        t.case.branch_gmd.push(line_gmd(br, ha, hb));
        let r = 0.2 + rng.gen_range(0.02..0.06) * len;
        t.gmd_branch(hi_node[a], hi_node[b], br, r, len);
    }
    let case = CaseData::from_tables(t.case).expect("generated case is valid");

    let periods = rng.gen_range(2..=opts.max_periods.max(2));
    let rise = periods.div_ceil(2) as f64 * opts.dt;
    let fall = (periods / 2) as f64 * opts.dt;
    let scenario = make_ramp_scenario(rng.gen_range(1.0..5.0), rise, fall, opts.dt, rng.gen_range(0.0..360.0))
        .expect("valid ramp");
    (case, scenario)
}
