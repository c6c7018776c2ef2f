use serde::{Deserialize, Serialize};

use super::serde_util::{absent_f64, absent_id, default_angle_bigm, default_angle_lim, default_tap, default_true, flag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusType {
    PQ,
    PV,
    #[serde(rename = "slack")]
    Slack,
}

/// AC network bus. Powers and shunts are per-unit on the system base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    #[serde(rename = "bus_i")]
    pub id: usize,
    pub bus_type: BusType,
    #[serde(default)]
    pub pd: f64,
    #[serde(default)]
    pub qd: f64,
    /// Shunt conductance (active power drawn at 1 p.u. voltage).
    #[serde(default)]
    pub gs: f64,
    #[serde(default)]
    pub bs: f64,
    pub base_kv: f64,
    pub vmin: f64,
    pub vmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    #[serde(default)]
    pub index: usize,
    pub gen_bus: usize,
    /// Active power setpoint used by the ac power flow.
    #[serde(default)]
    pub pg: f64,
    /// Voltage magnitude setpoint for its bus.
    #[serde(default = "one")]
    pub vg: f64,
    pub pmin: f64,
    pub pmax: f64,
    #[serde(default)]
    pub qmin: f64,
    #[serde(default)]
    pub qmax: f64,
    /// Cost coefficients: constant, linear, quadratic.
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default = "default_true", with = "flag")]
    pub gen_status: bool,
}

fn one() -> f64 {
    1.0
}

/// AC branch (line, transformer or series capacitor).
///
/// The dc-approximation susceptance is `1 / (br_x * tap)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcBranch {
    #[serde(default)]
    pub index: usize,
    pub f_bus: usize,
    pub t_bus: usize,
    #[serde(default)]
    pub br_r: f64,
    pub br_x: f64,
    #[serde(default)]
    pub br_b: f64,
    #[serde(default = "default_tap")]
    pub tap: f64,
    pub rate_a: f64,
    /// Angle-difference limit when in service, radians.
    #[serde(default = "default_angle_lim")]
    pub angle_lim: f64,
    /// Angle-difference relaxation when switched off, radians.
    #[serde(default = "default_angle_bigm")]
    pub angle_bigm: f64,
    #[serde(default, with = "flag")]
    pub switchable: bool,
    /// Nominal status `z_nom`.
    #[serde(default = "default_true", with = "flag")]
    pub br_status: bool,
    /// Circuit number among parallel branches; assigned on parse when absent.
    #[serde(default)]
    pub ckt: usize,
}

impl AcBranch {
    pub fn tap_ratio(&self) -> f64 {
        if self.tap == 0.0 {
            1.0
        } else {
            self.tap
        }
    }

    /// Series susceptance for the dc power flow approximation.
    pub fn dc_susceptance(&self) -> f64 {
        1.0 / (self.br_x * self.tap_ratio())
    }
}

/// Node of the equivalent dc network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmdBus {
    #[serde(default)]
    pub index: usize,
    pub parent: usize,
    #[serde(with = "flag")]
    pub status: bool,
    /// Admittance to ground, siemens.
    pub g_gnd: f64,
    #[serde(default)]
    pub name: String,
}

/// Edge of the equivalent dc network (per phase).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmdBranch {
    #[serde(default)]
    pub index: usize,
    pub f_bus: usize,
    pub t_bus: usize,
    pub parent: usize,
    #[serde(with = "flag")]
    pub status: bool,
    /// Resistance, ohms.
    pub br_r: f64,
    /// Induced quasi-dc voltage, volts.
    #[serde(default)]
    pub br_v: f64,
    #[serde(default)]
    pub len_km: f64,
    #[serde(default)]
    pub name: String,
}

impl GmdBranch {
    pub fn admittance(&self) -> f64 {
        1.0 / self.br_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchKind {
    #[serde(rename = "xfmr", alias = "transformer")]
    Transformer,
    #[serde(rename = "line")]
    Line,
    #[serde(rename = "series_cap")]
    SeriesCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindingConfig {
    #[serde(rename = "gwye-gwye")]
    GwyeGwye,
    #[serde(rename = "gwye-delta")]
    GwyeDelta,
    #[serde(rename = "delta-delta")]
    DeltaDelta,
    #[serde(rename = "gwye-gwye-auto")]
    GwyeGwyeAuto,
    #[serde(rename = "none")]
    None,
}

/// Winding and reactive-loss data attached to an ac branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGmd {
    /// AC branch id; defaults to the branch in the same row position.
    #[serde(default)]
    pub branch: usize,
    pub hi_bus: usize,
    pub lo_bus: usize,
    #[serde(with = "absent_id")]
    pub gmd_br_hi: Option<usize>,
    #[serde(with = "absent_id")]
    pub gmd_br_lo: Option<usize>,
    /// Reactive loss scaling factor, per-unit.
    #[serde(with = "absent_f64")]
    pub gmd_k: Option<f64>,
    #[serde(with = "absent_id")]
    pub gmd_br_se: Option<usize>,
    #[serde(with = "absent_id")]
    pub gmd_br_co: Option<usize>,
    #[serde(rename = "baseMVA", with = "absent_f64")]
    pub base_mva: Option<f64>,
    /// Carried through unchanged; no analysis reads it.
    #[serde(default)]
    pub dispatch: f64,
    #[serde(rename = "type")]
    pub kind: BranchKind,
    pub config: WindingConfig,
    /// Winding turns ratio; derived from the terminal base voltages when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turns_ratio: Option<f64>,
    /// Maximum allowed effective GIC, amperes. Unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gic_bound: Option<f64>,
}

impl BranchGmd {
    pub fn is_transformer(&self) -> bool {
        self.kind == BranchKind::Transformer
    }
}

/// Transformer thermal parameters. Temperatures in °C, time constant in minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchThermal {
    #[serde(default)]
    pub branch: usize,
    #[serde(with = "flag")]
    pub xfmr: bool,
    pub temp_amb: f64,
    pub hs_inst_lim: f64,
    pub hs_avg_lim: f64,
    pub hs_rated: f64,
    pub to_time_c: f64,
    pub to_rated: f64,
    /// Initial top-oil rise over ambient, used when `to_inited` is set.
    pub to_init: f64,
    #[serde(with = "flag")]
    pub to_inited: bool,
    /// Hot-spot rise per ampere of effective GIC, °C/A.
    pub hs_coeff: f64,
    /// Hot-spot limit for the mitigation problem; `hs_inst_lim` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotspot_limit: Option<f64>,
}

impl BranchThermal {
    pub fn limit(&self) -> f64 {
        self.hotspot_limit.unwrap_or(self.hs_inst_lim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusGmd {
    #[serde(default)]
    pub bus: usize,
    pub lat: f64,
    pub lon: f64,
}
