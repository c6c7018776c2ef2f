use std::collections::{BTreeMap, BTreeSet};

use super::{BranchKind, BusType, CaseData, WindingConfig};
use crate::error::{Error, Result};

fn invariant(table: &'static str, row: usize, msg: impl Into<String>) -> Error {
    Error::Invariant {
        table,
        row: row + 1,
        msg: msg.into(),
    }
}

fn reference(table: &'static str, row: usize, msg: impl Into<String>) -> Error {
    Error::Reference {
        table,
        row: row + 1,
        msg: msg.into(),
    }
}

pub(super) fn validate(case: &CaseData) -> Result<()> {
    if !(case.base_mva > 0.0) {
        return Err(Error::Structure(format!("baseMVA must be positive, got {}", case.base_mva)));
    }
    if case.buses.is_empty() {
        return Err(Error::Structure("bus table is empty".into()));
    }
    ac_tables(case)?;
    dc_tables(case)?;
    gmd_tables(case)?;
    Ok(())
}

fn ac_tables(case: &CaseData) -> Result<()> {
    for (k, bus) in case.buses.iter().enumerate() {
        if !(bus.base_kv > 0.0) {
            return Err(invariant("bus", k, format!("bus {}: base_kv must be positive", bus.id)));
        }
        if bus.vmin > bus.vmax {
            return Err(invariant("bus", k, format!("bus {}: vmin exceeds vmax", bus.id)));
        }
    }
    for (k, g) in case.generators.iter().enumerate() {
        if case.bus(g.gen_bus).is_none() {
            return Err(reference("gen", k, format!("gen_bus {}", g.gen_bus)));
        }
        if g.pmin > g.pmax {
            return Err(invariant("gen", k, "pmin exceeds pmax"));
        }
        if g.c2 < 0.0 {
            return Err(invariant("gen", k, "quadratic cost coefficient must be non-negative"));
        }
    }
    for (k, br) in case.branches.iter().enumerate() {
        for end in [br.f_bus, br.t_bus] {
            if case.bus(end).is_none() {
                return Err(reference("branch", k, format!("bus {end}")));
            }
        }
        if br.f_bus == br.t_bus {
            return Err(invariant("branch", k, "self loop"));
        }
        if br.br_x == 0.0 {
            return Err(invariant("branch", k, "br_x must be nonzero"));
        }
        if !(br.rate_a > 0.0) {
            return Err(invariant("branch", k, "rate_a must be positive"));
        }
        if br.angle_lim > br.angle_bigm {
            return Err(invariant("branch", k, "angle_lim exceeds angle_bigm"));
        }
    }

    // Exactly one slack per topological component (status ignored).
    let ids: Vec<usize> = case.buses.iter().map(|b| b.id).collect();
    let pos: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for br in &case.branches {
        let a = find(&mut parent, pos[&br.f_bus]);
        let b = find(&mut parent, pos[&br.t_bus]);
        parent[a] = b;
    }
    let mut slacks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut members: BTreeMap<usize, usize> = BTreeMap::new();
    for (k, bus) in case.buses.iter().enumerate() {
        let root = find(&mut parent, k);
        members.entry(root).or_insert(bus.id);
        if bus.bus_type == BusType::Slack {
            slacks.entry(root).or_default().push(bus.id);
        }
    }
    for (root, first) in members {
        match slacks.get(&root).map_or(0, Vec::len) {
            1 => {}
            0 => {
                return Err(invariant(
                    "bus",
                    pos[&first],
                    format!("ac component containing bus {first} has no slack bus"),
                ))
            }
            _ => {
                return Err(invariant(
                    "bus",
                    pos[&first],
                    format!("ac component containing bus {first} has slack buses {:?}", slacks[&root]),
                ))
            }
        }
    }
    Ok(())
}

fn dc_tables(case: &CaseData) -> Result<()> {
    for (k, b) in case.gmd_buses.iter().enumerate() {
        if case.bus(b.parent).is_none() {
            return Err(reference("gmd_bus", k, format!("parent bus {}", b.parent)));
        }
        if !(b.g_gnd >= 0.0) {
            return Err(invariant("gmd_bus", k, "g_gnd must be non-negative"));
        }
    }
    for (k, br) in case.gmd_branches.iter().enumerate() {
        for end in [br.f_bus, br.t_bus] {
            if case.gmd_bus(end).is_none() {
                return Err(reference("gmd_branch", k, format!("gmd bus {end}")));
            }
        }
        if case.branch(br.parent).is_none() {
            return Err(reference("gmd_branch", k, format!("parent branch {}", br.parent)));
        }
        if !(br.br_r > 0.0) {
            return Err(invariant("gmd_branch", k, "br_r must be positive"));
        }
        if !(br.len_km >= 0.0) {
            return Err(invariant("gmd_branch", k, "len_km must be non-negative"));
        }
    }
    Ok(())
}

fn gmd_tables(case: &CaseData) -> Result<()> {
    for (k, row) in case.branch_gmd.iter().enumerate() {
        if case.branch(row.branch).is_none() {
            return Err(reference("branch_gmd", k, format!("branch {}", row.branch)));
        }
        for end in [row.hi_bus, row.lo_bus] {
            if case.bus(end).is_none() {
                return Err(reference("branch_gmd", k, format!("bus {end}")));
            }
        }
        let windings = [
            ("gmd_br_hi", row.gmd_br_hi),
            ("gmd_br_lo", row.gmd_br_lo),
            ("gmd_br_se", row.gmd_br_se),
            ("gmd_br_co", row.gmd_br_co),
        ];
        for (name, id) in windings {
            if let Some(id) = id {
                if case.gmd_branch(id).is_none() {
                    return Err(reference("branch_gmd", k, format!("{name} {id}")));
                }
            }
        }
        let is_xf = row.kind == BranchKind::Transformer;
        if is_xf == (row.config == WindingConfig::None) {
            return Err(invariant(
                "branch_gmd",
                k,
                "type xfmr requires a winding config and other types require config none",
            ));
        }
        if !is_xf {
            if windings.iter().any(|(_, id)| id.is_some()) {
                return Err(invariant("branch_gmd", k, "non-transformer rows must carry -1 winding references"));
            }
            continue;
        }
        let need = |name: &str, id: Option<usize>| {
            if id.is_none() {
                Err(invariant("branch_gmd", k, format!("{:?} requires {name}", row.config)))
            } else {
                Ok(())
            }
        };
        match row.config {
            WindingConfig::GwyeDelta => need("gmd_br_hi", row.gmd_br_hi)?,
            WindingConfig::GwyeGwye => {
                need("gmd_br_hi", row.gmd_br_hi)?;
                need("gmd_br_lo", row.gmd_br_lo)?;
            }
            WindingConfig::GwyeGwyeAuto => {
                need("gmd_br_se", row.gmd_br_se)?;
                need("gmd_br_co", row.gmd_br_co)?;
            }
            WindingConfig::DeltaDelta | WindingConfig::None => {}
        }
        if matches!(row.config, WindingConfig::GwyeGwye | WindingConfig::GwyeGwyeAuto) {
            match case.turns_ratio(row) {
                Some(a) if a > 0.0 && a.is_finite() => {}
                other => {
                    return Err(invariant(
                        "branch_gmd",
                        k,
                        format!("turns ratio must be positive, got {other:?}"),
                    ))
                }
            }
        }
        if let Some(bound) = row.gic_bound {
            if !(bound >= 0.0) {
                return Err(invariant("branch_gmd", k, "gic_bound must be non-negative"));
            }
        }
        if case.thermal_for(row.branch).is_none() {
            return Err(invariant(
                "branch_gmd",
                k,
                format!("transformer branch {} has no branch_thermal row", row.branch),
            ));
        }
    }

    let transformers: BTreeSet<usize> = case.transformers().map(|r| r.branch).collect();
    for (k, th) in case.thermal.iter().enumerate() {
        if !transformers.contains(&th.branch) {
            return Err(reference(
                "branch_thermal",
                k,
                format!("branch {} is not a transformer", th.branch),
            ));
        }
        if !(th.to_time_c > 0.0) {
            return Err(invariant("branch_thermal", k, "to_time_c must be positive"));
        }
        if !(th.to_rated > 0.0) {
            return Err(invariant("branch_thermal", k, "to_rated must be positive"));
        }
        if th.hs_inst_lim < th.hs_avg_lim {
            return Err(invariant("branch_thermal", k, "hs_inst_lim is below hs_avg_lim"));
        }
        if !(th.hs_coeff >= 0.0) {
            return Err(invariant("branch_thermal", k, "hs_coeff must be non-negative"));
        }
    }

    for (k, c) in case.bus_gmd.iter().enumerate() {
        if case.bus(c.bus).is_none() {
            return Err(reference("bus_gmd", k, format!("bus {}", c.bus)));
        }
        if !(-90.0..=90.0).contains(&c.lat) || !(-180.0..=180.0).contains(&c.lon) {
            return Err(invariant("bus_gmd", k, "coordinates out of range"));
        }
    }
    Ok(())
}
