use std::collections::BTreeMap;
use std::io::Write;

use super::GicSolution;
use crate::case::CaseData;
use crate::error::Result;

/// `t_min,gmd_bus_id,v_dc_volts`
pub fn write_bus_csv(out: impl Write, sols: &[GicSolution<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_min", "gmd_bus_id", "v_dc_volts"])?;
    for sol in sols {
        for (id, v) in &sol.node_voltages {
            w.write_record([sol.t_min.to_string(), id.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t_min,gmd_branch_id,i_dc_amps,i_eff_amps`. Winding branches carry the
/// effective GIC of their transformer; other branches report 0.
pub fn write_branch_csv(case: &CaseData, out: impl Write, sols: &[GicSolution<f64>]) -> Result<()> {
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for row in case.transformers() {
        for id in [row.gmd_br_hi, row.gmd_br_lo, row.gmd_br_se, row.gmd_br_co].into_iter().flatten() {
            owner.insert(id, row.branch);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_min", "gmd_branch_id", "i_dc_amps", "i_eff_amps"])?;
    for sol in sols {
        for (id, i) in &sol.branch_currents {
            let eff = owner.get(id).and_then(|xf| sol.effective.get(xf)).copied().unwrap_or(0.0);
            w.write_record([sol.t_min.to_string(), id.to_string(), i.to_string(), eff.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
