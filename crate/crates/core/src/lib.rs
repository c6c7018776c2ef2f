//! Geomagnetically induced currents in power networks.
//!
//! * [`case`]: network tables, parsing, validation.
//! * [`gic`]: quasi-dc nodal analysis and effective transformer GIC.
//! * [`coupling`]: GIC reactive losses and ac power flow.
//! * [`thermal`]: transformer top-oil and hot-spot temperatures.
//! * [`scenario`]: geoelectric field time series.
//!
//! The numerical kernels in [`gic`] and [`thermal`] are generic over
//! [`Scalar`]; the aliases below name the usual instantiations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod case;
pub mod coupling;
pub mod error;
pub mod fixtures;
pub mod gic;
pub mod scalar;
pub mod scenario;
pub mod synth;
pub mod thermal;

pub use case::{parse_case, serialize_case, CaseData};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use scenario::{make_ramp_scenario, FieldAt, FieldScenario};

pub type DcSystem64 = gic::DcSystem<f64>;
pub type DcSystem32 = gic::DcSystem<f32>;
pub type GicSolution64 = gic::GicSolution<f64>;
pub type GicSolution32 = gic::GicSolution<f32>;
pub type ThermalTrace64 = thermal::ThermalTrace<f64>;
pub type ThermalTrace32 = thermal::ThermalTrace<f32>;
