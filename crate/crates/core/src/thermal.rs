//! Transformer top-oil and hot-spot temperatures.
//!
//! Top-oil rise follows a first-order lag towards its steady value,
//! discretized with the bilinear (trapezoidal) rule over periods of length
//! `Δ`. Hot-spot rise is instantaneous and linear in effective GIC.

use std::collections::BTreeMap;
use std::io::Write;

use crate::case::{BranchThermal, CaseData};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn apparent_power<T: Scalar>(p: T, q: T) -> T {
    p.hypot(q)
}

/// Steady-state top-oil rise at loading `s` of rating `s_bar`.
pub fn steady_rise<T: Scalar>(s: T, s_bar: T, delta_r: T) -> T {
    let frac = s / s_bar;
    delta_r * frac * frac
}

/// Discretized time constant `2τ/Δ`.
pub fn zeta<T: Scalar>(tau_min: T, dt_min: T) -> T {
    T::of(2.0) * tau_min / dt_min
}

/// One period of the top-oil recursion.
pub fn step_topoil<T: Scalar>(delta_prev: T, du_prev: T, du_now: T, zeta: T) -> T {
    let one = T::one();
    (du_now + du_prev) / (one + zeta) - (one - zeta) / (one + zeta) * delta_prev
}

pub fn hotspot_rise<T: Scalar>(i_eff: T, coeff: T) -> T {
    coeff * i_eff
}

/// Top-oil rise before the first period: the configured value when
/// `to_inited` is set, the steady rise of the first period otherwise.
pub fn initial_topoil<T: Scalar>(th: &BranchThermal, du_first: T) -> T {
    if th.to_inited {
        T::of(th.to_init)
    } else {
        du_first
    }
}

/// Per-period inputs: apparent power (per-unit) and effective GIC (A) for
/// each transformer branch id. Missing series are taken as zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThermalInput<T> {
    /// Reported time of each period, minutes.
    pub times: Vec<f64>,
    pub dt: f64,
    pub loading: BTreeMap<usize, Vec<T>>,
    pub i_eff: BTreeMap<usize, Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalPoint<T> {
    pub t_min: f64,
    /// Top-oil rise over ambient.
    pub delta: T,
    /// Hot-spot rise over top oil.
    pub eta: T,
    /// Ambient + δ + η.
    pub hotspot: T,
    pub limit: T,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThermalTrace<T> {
    pub times: Vec<f64>,
    /// Transformer branch id → one point per period.
    pub series: BTreeMap<usize, Vec<ThermalPoint<T>>>,
}

impl<T: Scalar> ThermalTrace<T> {
    /// Highest absolute hot-spot of one transformer.
    pub fn peak(&self, branch: usize) -> Option<T> {
        self.series.get(&branch).map(|s| s.iter().map(|p| p.hotspot).fold(T::neg_infinity(), T::max))
    }

    /// `(branch, t_min, hotspot, limit)` of every limit crossing.
    pub fn violations(&self) -> Vec<(usize, f64, T, T)> {
        self.series
            .iter()
            .flat_map(|(&b, pts)| pts.iter().filter(|p| p.violation).map(move |p| (b, p.t_min, p.hotspot, p.limit)))
            .collect()
    }
}

pub fn simulate<T: Scalar>(case: &CaseData, input: &ThermalInput<T>) -> Result<ThermalTrace<T>> {
    if !(input.dt > 0.0) {
        return Err(Error::Scenario(format!("thermal step must be positive, got {}", input.dt)));
    }
    let periods = input.times.len();
    let mut series = BTreeMap::new();
    for th in &case.thermal {
        let rating = T::of(case.branch(th.branch).expect("validated").rate_a);
        let z = zeta(T::of(th.to_time_c), T::of(input.dt));
        let coeff = T::of(th.hs_coeff);
        let limit = T::of(th.limit());
        let amb = T::of(th.temp_amb);
        let value = |map: &BTreeMap<usize, Vec<T>>, k: usize| -> T {
            map.get(&th.branch).and_then(|v| v.get(k)).copied().unwrap_or_else(T::zero)
        };
        let du: Vec<T> = (0..periods)
            .map(|k| steady_rise(value(&input.loading, k), rating, T::of(th.to_rated)))
            .collect();
        let mut points = Vec::with_capacity(periods);
        if periods > 0 {
            let mut delta = initial_topoil(th, du[0]);
            let mut du_prev = du[0];
            for (k, &du_k) in du.iter().enumerate() {
                delta = step_topoil(delta, du_prev, du_k, z);
                du_prev = du_k;
                let eta = hotspot_rise(value(&input.i_eff, k), coeff);
                let hotspot = amb + delta + eta;
                points.push(ThermalPoint {
                    t_min: input.times[k],
                    delta,
                    eta,
                    hotspot,
                    limit,
                    violation: hotspot > limit,
                });
            }
        }
        series.insert(th.branch, points);
    }
    Ok(ThermalTrace {
        times: input.times.clone(),
        series,
    })
}

/// `t_min,branch_id,delta_to_C,eta_hs_C,hotspot_C,limit_C,violation`,
/// ordered by time then branch.
pub fn write_trace_csv(out: impl Write, trace: &ThermalTrace<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_min", "branch_id", "delta_to_C", "eta_hs_C", "hotspot_C", "limit_C", "violation"])?;
    for k in 0..trace.times.len() {
        for (id, pts) in &trace.series {
            let p = &pts[k];
            w.write_record([
                p.t_min.to_string(),
                id.to_string(),
                p.delta.to_string(),
                p.eta.to_string(),
                p.hotspot.to_string(),
                p.limit.to_string(),
                u8::from(p.violation).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
