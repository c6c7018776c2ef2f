use thiserror::Error;

use crate::model::ConstraintClass;

pub type Result<T, E = OtsError> = std::result::Result<T, E>;

/// Which constraint class first made a fixed-topology probe infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub topology: &'static str,
    /// `None` when the probe was feasible with every class present.
    pub first_violated: Option<ConstraintClass>,
}

#[derive(Debug, Error)]
pub enum OtsError {
    #[error(transparent)]
    Case(#[from] gmdgrid::Error),

    #[error("cannot bound dc voltages for the switching big-M: {0}")]
    BigM(String),

    #[error("LP numerical failure: {msg} (residual {residual:e}, coefficient range {condition:e})")]
    Numerical { msg: String, residual: f64, condition: f64 },

    #[error("mitigation model is infeasible; probes: {}", describe(probes))]
    Infeasible { probes: Vec<ProbeResult> },

    #[error("{binaries} binaries exceed the enumeration cap of {cap}")]
    CapExceeded { binaries: usize, cap: usize },

    #[error("time limit reached after {nodes} nodes without a feasible plan")]
    Timeout { nodes: usize },

    #[error("plan does not match the model: {0}")]
    Plan(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn describe(probes: &[ProbeResult]) -> String {
    probes
        .iter()
        .map(|p| match p.first_violated {
            Some(c) => format!("{} fails at {}", p.topology, c),
            None => format!("{} feasible", p.topology),
        })
        .collect::<Vec<_>>()
        .join("; ")
}
