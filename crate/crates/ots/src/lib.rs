//! Time-extended optimal transmission switching against GIC transformer
//! heating, in the dc power flow approximation.
//!
//! [`build_model`] turns a case and a field scenario into a mixed-integer
//! linear program with one binary per switchable branch shared by all
//! periods. [`solve`] runs branch-and-bound over HiGHS relaxations,
//! [`enumerate_solve`] checks every assignment, and [`verify_plan`]
//! re-simulates a plan with the physics crate alone.

pub mod error;
pub mod lp;
pub mod model;
pub mod plan;
pub mod solve;
pub mod verify;

pub use error::{OtsError, Result};
pub use model::{build_model, ConstraintClass, OtsModel, OtsOptions};
pub use plan::{write_status_csv, MitigationPlan};
pub use solve::{enumerate_solve, fixed_plan, probe_infeasibility, solve};
pub use verify::{verify_plan, verify_plan_with, VerifyOptions, VerifyReport};
