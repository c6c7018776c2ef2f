#![allow(dead_code)]

use gmdgrid::case::{
    AcBranch, BranchGmd, BranchKind, BranchThermal, Bus, BusGmd, BusType, CaseData, Generator, GmdBranch, GmdBus,
    WindingConfig,
};
use gmdgrid::{make_ramp_scenario, FieldScenario};

fn bus(id: usize, bus_type: BusType, pd: f64, base_kv: f64) -> Bus {
    Bus {
        id,
        bus_type,
        pd,
        qd: 0.0,
        gs: 0.0,
        bs: 0.0,
        base_kv,
        vmin: 0.9,
        vmax: 1.1,
    }
}

fn gen(index: usize, gen_bus: usize, pmax: f64, c1: f64, c2: f64) -> Generator {
    Generator {
        index,
        gen_bus,
        pg: 0.0,
        vg: 1.0,
        pmin: 0.0,
        pmax,
        qmin: -5.0,
        qmax: 5.0,
        c0: 1.0,
        c1,
        c2,
        gen_status: true,
    }
}

fn branch(index: usize, f_bus: usize, t_bus: usize, br_x: f64, rate_a: f64, switchable: bool) -> AcBranch {
    AcBranch {
        index,
        f_bus,
        t_bus,
        br_r: 0.0,
        br_x,
        br_b: 0.0,
        tap: 1.0,
        rate_a,
        angle_lim: 0.5,
        angle_bigm: 1.0,
        switchable,
        br_status: true,
        ckt: 0,
    }
}

fn link(branch: usize, hi_bus: usize, lo_bus: usize, winding: Option<usize>) -> BranchGmd {
    BranchGmd {
        branch,
        hi_bus,
        lo_bus,
        gmd_br_hi: winding,
        gmd_br_lo: None,
        gmd_k: winding.map(|_| 1.8),
        gmd_br_se: None,
        gmd_br_co: None,
        base_mva: winding.map(|_| 100.0),
        dispatch: 0.0,
        kind: if winding.is_some() { BranchKind::Transformer } else { BranchKind::Line },
        config: if winding.is_some() { WindingConfig::GwyeDelta } else { WindingConfig::None },
        turns_ratio: None,
        gic_bound: None,
    }
}

fn dc_bus(index: usize, parent: usize, g_gnd: f64) -> GmdBus {
    GmdBus {
        index,
        parent,
        status: true,
        g_gnd,
        name: String::new(),
    }
}

fn dc_branch(index: usize, f_bus: usize, t_bus: usize, parent: usize, br_r: f64) -> GmdBranch {
    GmdBranch {
        index,
        f_bus,
        t_bus,
        parent,
        status: true,
        br_r,
        br_v: 0.0,
        len_km: 0.0,
        name: String::new(),
    }
}

/// Two grounded substations two degrees of longitude apart, joined by a
/// direct line (branch 1) and by a two-hop detour through a switching
/// station to the north (branches 2 and 3). The cheap generator sits in the
/// west; the 2 pu eastern load needs both paths to be served from it alone,
/// and the local unit covers at most half.
///
/// At 3.2 V/km east the eastern hot-spot peaks near 300 °C all closed,
/// 240 °C on the direct line alone and 185 °C on the detour alone.
pub fn east_west(limit: f64, detour_switchable: [bool; 2]) -> CaseData {
    let mut case = CaseData::empty("east_west", 100.0);
    case.buses = vec![
        bus(1, BusType::Slack, 0.0, 345.0),
        bus(2, BusType::PQ, 0.0, 20.0),
        bus(3, BusType::PQ, 0.0, 345.0),
        bus(4, BusType::PQ, 2.0, 20.0),
        bus(5, BusType::PQ, 0.0, 345.0),
    ];
    case.generators = vec![gen(1, 2, 5.0, 10.0, 0.5), gen(2, 4, 1.0, 50.0, 0.0)];
    case.branches = vec![
        branch(1, 1, 3, 0.02, 1.5, true),
        branch(2, 1, 5, 0.015, 1.0, detour_switchable[0]),
        branch(3, 5, 3, 0.015, 1.0, detour_switchable[1]),
        branch(4, 1, 2, 0.01, 6.0, false),
        branch(5, 3, 4, 0.01, 6.0, false),
    ];
    case.branch_gmd = vec![
        link(1, 1, 3, None),
        link(2, 1, 5, None),
        link(3, 5, 3, None),
        link(4, 1, 2, Some(4)),
        link(5, 3, 4, Some(5)),
    ];
    case.gmd_buses = vec![
        dc_bus(1, 1, 5.0),
        dc_bus(2, 3, 5.0),
        dc_bus(3, 1, 0.0),
        dc_bus(4, 3, 0.0),
        dc_bus(5, 5, 0.0),
    ];
    case.gmd_branches = vec![
        dc_branch(1, 3, 4, 1, 1.0),
        dc_branch(2, 3, 5, 2, 0.8),
        dc_branch(3, 5, 4, 3, 0.8),
        dc_branch(4, 3, 1, 4, 0.1),
        dc_branch(5, 4, 2, 5, 0.1),
    ];
    let thermal = |branch| BranchThermal {
        branch,
        xfmr: true,
        temp_amb: 25.0,
        hs_inst_lim: limit,
        hs_avg_lim: limit,
        hs_rated: 150.0,
        to_time_c: 71.0,
        to_rated: 75.0,
        to_init: 0.0,
        to_inited: true,
        hs_coeff: 0.63,
        hotspot_limit: None,
    };
    case.thermal = vec![thermal(4), thermal(5)];
    case.bus_gmd = vec![
        BusGmd { bus: 1, lat: 40.0, lon: -89.0 },
        BusGmd { bus: 2, lat: 40.0, lon: -89.0 },
        BusGmd { bus: 3, lat: 40.0, lon: -87.0 },
        BusGmd { bus: 4, lat: 40.0, lon: -87.0 },
        BusGmd { bus: 5, lat: 40.5, lon: -88.0 },
    ];
    CaseData::from_tables(case).expect("toy case is valid")
}

/// Up-and-down eastward ramp to `peak` V/km, `periods` periods of 10 min.
pub fn ramp(peak: f64, periods: usize) -> FieldScenario {
    let rise = periods.div_ceil(2) as f64 * 10.0;
    let fall = (periods / 2) as f64 * 10.0;
    make_ramp_scenario(peak, rise, fall, 10.0, 90.0).expect("valid ramp")
}
