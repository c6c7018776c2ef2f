//! Reactive-power loss from effective GIC and the sequential GIC → ac
//! power flow analysis.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::case::{BusType, CaseData};
use crate::error::{Error, Result};
use crate::gic::{solve_gic, FieldInput, GicSolution, Topology};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLoss {
    /// Bus the loss is drawn from (the transformer's high side).
    pub bus: usize,
    /// Per-unit on the system base.
    pub d_q: f64,
}

/// Transformer reactive losses keyed by ac branch id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QLossMap {
    pub entries: BTreeMap<usize, QLoss>,
}

impl QLossMap {
    pub fn total(&self) -> f64 {
        self.entries.values().map(|q| q.d_q).sum()
    }

    pub fn at_bus(&self, bus: usize) -> f64 {
        self.entries.values().filter(|q| q.bus == bus).map(|q| q.d_q).sum()
    }
}

/// Peak phase current base of a transformer, amperes.
pub fn current_base(s_mva: f64, v_kv: f64) -> f64 {
    std::f64::consts::SQRT_2 * s_mva * 1000.0 / (3f64.sqrt() * v_kv)
}

/// Reactive loss of one transformer, per-unit on `system_mva`.
///
/// `gmd_k` maps effective GIC in per-unit of the peak phase current base
/// (on the transformer's own rating `xfmr_mva` and high-side voltage) to
/// reactive power in per-unit of the same rating, at 1 p.u. voltage.
pub fn reactive_loss(gmd_k: f64, v_pu: f64, i_eff: f64, xfmr_mva: f64, hi_kv: f64, system_mva: f64) -> f64 {
    gmd_k * v_pu * (i_eff / current_base(xfmr_mva, hi_kv)) * xfmr_mva / system_mva
}

/// Losses for every transformer, using `v_pu` by bus id (1.0 when absent).
pub fn qloss(case: &CaseData, sol: &GicSolution<f64>, v_pu: &BTreeMap<usize, f64>) -> QLossMap {
    let mut entries = BTreeMap::new();
    for row in case.transformers() {
        let i_eff = sol.effective.get(&row.branch).copied().unwrap_or(0.0);
        let k = row.gmd_k.unwrap_or(0.0);
        let hi_kv = case.bus(row.hi_bus).expect("validated").base_kv;
        let v = v_pu.get(&row.hi_bus).copied().unwrap_or(1.0);
        let d_q = reactive_loss(k, v, i_eff, row.base_mva.unwrap_or(case.base_mva), hi_kv, case.base_mva);
        entries.insert(row.branch, QLoss { bus: row.hi_bus, d_q });
    }
    QLossMap { entries }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// Largest active or reactive mismatch, per-unit.
    pub max_mismatch: f64,
    pub worst_bus: usize,
    pub converged: bool,
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, max mismatch {:.3e} p.u. at bus {}",
            self.iterations, self.max_mismatch, self.worst_bus
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow {
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub vm: BTreeMap<usize, f64>,
    /// Radians.
    pub va: BTreeMap<usize, f64>,
    pub flows: BTreeMap<usize, BranchFlow>,
    pub gen_p: BTreeMap<usize, f64>,
    pub gen_q: BTreeMap<usize, f64>,
    pub report: ConvergenceReport,
}

impl AcSolution {
    pub fn total_q_gen(&self) -> f64 {
        self.gen_q.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            tolerance: 1e-8,
        }
    }
}

/// Branch admittances of the pi model: `(y_ff, y_ft, y_tf, y_tt)`.
pub fn branch_admittance(r: f64, x: f64, b: f64, tap: f64) -> (Complex64, Complex64, Complex64, Complex64) {
    let ys = Complex64::new(r, x).inv();
    let half = Complex64::new(0.0, 0.5 * b);
    let tt = ys + half;
    (tt / (tap * tap), -ys / tap, -ys / tap, tt)
}

struct Network {
    ids: Vec<usize>,
    index: BTreeMap<usize, usize>,
    ybus: DMatrix<Complex64>,
}

fn build_network(case: &CaseData) -> Network {
    let ids: Vec<usize> = case.buses.iter().map(|b| b.id).collect();
    let index: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let n = ids.len();
    let mut ybus = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in case.branches.iter().filter(|b| b.br_status) {
        let (f, t) = (index[&br.f_bus], index[&br.t_bus]);
        let (yff, yft, ytf, ytt) = branch_admittance(br.br_r, br.br_x, br.br_b, br.tap_ratio());
        ybus[(f, f)] += yff;
        ybus[(f, t)] += yft;
        ybus[(t, f)] += ytf;
        ybus[(t, t)] += ytt;
    }
    for (k, bus) in case.buses.iter().enumerate() {
        ybus[(k, k)] += Complex64::new(bus.gs, bus.bs);
    }
    Network { ids, index, ybus }
}

fn check_islands(case: &CaseData, net: &Network) -> Result<()> {
    let n = net.ids.len();
    let mut adj = vec![Vec::new(); n];
    for br in case.branches.iter().filter(|b| b.br_status) {
        let (f, t) = (net.index[&br.f_bus], net.index[&br.t_bus]);
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = case
        .buses
        .iter()
        .enumerate()
        .filter(|(_, b)| b.bus_type == BusType::Slack)
        .map(|(k, _)| k)
        .collect();
    for &k in &queue {
        seen[k] = true;
    }
    while let Some(k) = queue.pop_front() {
        for &m in &adj[k] {
            if !seen[m] {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(k) => Err(Error::Islanded { bus: net.ids[k] }),
        None => Ok(()),
    }
}

/// Newton power flow in polar form from a flat start, with `extra` reactive
/// loads added at their buses.
pub fn ac_power_flow(case: &CaseData, extra: &QLossMap) -> Result<AcSolution> {
    ac_power_flow_with(case, extra, PowerFlowOptions::default())
}

pub fn ac_power_flow_with(case: &CaseData, extra: &QLossMap, opts: PowerFlowOptions) -> Result<AcSolution> {
    let net = build_network(case);
    check_islands(case, &net)?;
    let n = net.ids.len();

    let mut kind: Vec<BusType> = case.buses.iter().map(|b| b.bus_type).collect();
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    let mut gens_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, bus) in case.buses.iter().enumerate() {
        p_spec[k] = -bus.pd;
        q_spec[k] = -bus.qd - extra.at_bus(bus.id);
    }
    for (g, gen) in case.generators.iter().enumerate().filter(|(_, g)| g.gen_status) {
        let k = net.index[&gen.gen_bus];
        if gens_at[k].is_empty() && kind[k] != BusType::PQ {
            vm[k] = gen.vg;
        }
        gens_at[k].push(g);
        p_spec[k] += gen.pg;
    }
    for k in 0..n {
        if kind[k] == BusType::PV && gens_at[k].is_empty() {
            log::warn!("PV bus {} has no in-service generator; treated as PQ", net.ids[k]);
            kind[k] = BusType::PQ;
        }
    }
    let pvpq: Vec<usize> = (0..n).filter(|&k| kind[k] != BusType::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&k| kind[k] == BusType::PQ).collect();

    let voltage = |vm: &[f64], va: &[f64]| -> DVector<Complex64> {
        DVector::from_iterator(n, (0..n).map(|k| Complex64::from_polar(vm[k], va[k])))
    };
    let mismatch = |v: &DVector<Complex64>| -> (DVector<Complex64>, Vec<Complex64>, f64, usize) {
        let i = &net.ybus * v;
        let mis: Vec<Complex64> = (0..n)
            .map(|k| v[k] * i[k].conj() - Complex64::new(p_spec[k], q_spec[k]))
            .collect();
        let mut worst = (0.0f64, 0usize);
        for &k in &pvpq {
            if mis[k].re.abs() > worst.0 {
                worst = (mis[k].re.abs(), k);
            }
        }
        for &k in &pq {
            if mis[k].im.abs() > worst.0 {
                worst = (mis[k].im.abs(), k);
            }
        }
        (i, mis, worst.0, worst.1)
    };

    let mut iterations = 0;
    let mut v = voltage(&vm, &va);
    let (mut ibus, mut mis, mut worst, mut worst_bus) = mismatch(&v);
    while worst > opts.tolerance {
        if iterations == opts.max_iterations {
            return Err(Error::NonConvergence(ConvergenceReport {
                iterations,
                max_mismatch: worst,
                worst_bus: net.ids[worst_bus],
                converged: false,
            }));
        }
        iterations += 1;

        // dS/dVa and dS/dVm, dense
        let j = Complex64::new(0.0, 1.0);
        let np = pvpq.len();
        let nq = pq.len();
        let mut jac = DMatrix::<f64>::zeros(np + nq, np + nq);
        let ds_dva = |r: usize, c: usize| -> Complex64 {
            let diag_i = if r == c { ibus[r] } else { Complex64::new(0.0, 0.0) };
            j * v[r] * (diag_i - net.ybus[(r, c)] * v[c]).conj()
        };
        let ds_dvm = |r: usize, c: usize| -> Complex64 {
            let vn = v[c] / v[c].norm();
            let mut x = v[r] * (net.ybus[(r, c)] * vn).conj();
            if r == c {
                x += ibus[r].conj() * vn;
            }
            x
        };
        for (a, &r) in pvpq.iter().enumerate() {
            for (b, &c) in pvpq.iter().enumerate() {
                jac[(a, b)] = ds_dva(r, c).re;
            }
            for (b, &c) in pq.iter().enumerate() {
                jac[(a, np + b)] = ds_dvm(r, c).re;
            }
        }
        for (a, &r) in pq.iter().enumerate() {
            for (b, &c) in pvpq.iter().enumerate() {
                jac[(np + a, b)] = ds_dva(r, c).im;
            }
            for (b, &c) in pq.iter().enumerate() {
                jac[(np + a, np + b)] = ds_dvm(r, c).im;
            }
        }
        let f = DVector::from_iterator(
            np + nq,
            pvpq.iter().map(|&k| mis[k].re).chain(pq.iter().map(|&k| mis[k].im)),
        );
        let Some(dx) = jac.lu().solve(&f) else {
            return Err(Error::NonConvergence(ConvergenceReport {
                iterations,
                max_mismatch: worst,
                worst_bus: net.ids[worst_bus],
                converged: false,
            }));
        };
        for (a, &k) in pvpq.iter().enumerate() {
            va[k] -= dx[a];
        }
        for (b, &k) in pq.iter().enumerate() {
            vm[k] -= dx[np + b];
        }
        v = voltage(&vm, &va);
        (ibus, mis, worst, worst_bus) = mismatch(&v);
        if !worst.is_finite() {
            return Err(Error::NonConvergence(ConvergenceReport {
                iterations,
                max_mismatch: worst,
                worst_bus: net.ids[worst_bus],
                converged: false,
            }));
        }
    }

    // Generator outputs: slack buses pick up the active mismatch, every
    // generator bus its reactive mismatch; split evenly between units.
    let mut gen_p = BTreeMap::new();
    let mut gen_q = BTreeMap::new();
    for k in 0..n {
        let units = &gens_at[k];
        if units.is_empty() {
            continue;
        }
        let s = v[k] * ibus[k].conj();
        let bus = &case.buses[k];
        let q_total = s.im + bus.qd + extra.at_bus(bus.id);
        let p_total = s.re + bus.pd;
        for &g in units {
            let gen = &case.generators[g];
            let p = if kind[k] == BusType::Slack {
                p_total / units.len() as f64
            } else {
                gen.pg
            };
            gen_p.insert(gen.index, p);
            gen_q.insert(gen.index, q_total / units.len() as f64);
        }
    }
    let mut flows = BTreeMap::new();
    for br in case.branches.iter().filter(|b| b.br_status) {
        let (f, t) = (net.index[&br.f_bus], net.index[&br.t_bus]);
        let (yff, yft, ytf, ytt) = branch_admittance(br.br_r, br.br_x, br.br_b, br.tap_ratio());
        let sf = v[f] * (yff * v[f] + yft * v[t]).conj();
        let st = v[t] * (ytf * v[f] + ytt * v[t]).conj();
        flows.insert(
            br.index,
            BranchFlow {
                p_from: sf.re,
                q_from: sf.im,
                p_to: st.re,
                q_to: st.im,
            },
        );
    }
    Ok(AcSolution {
        vm: net.ids.iter().zip(&vm).map(|(&id, &x)| (id, x)).collect(),
        va: net.ids.iter().zip(&va).map(|(&id, &x)| (id, x)).collect(),
        flows,
        gen_p,
        gen_q,
        report: ConvergenceReport {
            iterations,
            max_mismatch: worst,
            worst_bus: net.ids[worst_bus],
            converged: true,
        },
    })
}

/// GIC solve, losses at 1 p.u. voltage, power flow, losses at the
/// converged voltages, power flow again.
pub fn sequential_gic_ac(
    case: &CaseData,
    field: &FieldInput,
    topology: Option<&Topology>,
) -> Result<(GicSolution<f64>, QLossMap, AcSolution)> {
    let gic = solve_gic::<f64>(case, field, topology)?;
    let first = qloss(case, &gic, &BTreeMap::new());
    let pass1 = ac_power_flow(case, &first)?;
    let losses = qloss(case, &gic, &pass1.vm);
    let pass2 = ac_power_flow(case, &losses)?;
    Ok((gic, losses, pass2))
}

/// `bus_id,vm_pu,va_deg`
pub fn write_ac_bus_csv(out: impl Write, sol: &AcSolution) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bus_id", "vm_pu", "va_deg"])?;
    for (id, vm) in &sol.vm {
        w.write_record([id.to_string(), vm.to_string(), sol.va[id].to_degrees().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `branch_id,p_from_pu,q_from_pu`
pub fn write_ac_branch_csv(out: impl Write, sol: &AcSolution) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["branch_id", "p_from_pu", "q_from_pu"])?;
    for (id, f) in &sol.flows {
        w.write_record([id.to_string(), f.p_from.to_string(), f.q_from.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `branch_id,d_q_pu`
pub fn write_qloss_csv(out: impl Write, losses: &QLossMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["branch_id", "d_q_pu"])?;
    for (id, q) in &losses.entries {
        w.write_record([id.to_string(), q.d_q.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
