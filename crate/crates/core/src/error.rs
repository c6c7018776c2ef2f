use thiserror::Error;

use crate::coupling::ConvergenceReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed case document: {0}")]
    Structure(String),

    #[error("{table} row {row}: dangling reference: {msg}")]
    Reference {
        table: &'static str,
        row: usize,
        msg: String,
    },

    #[error("{table} row {row}: {msg}")]
    Invariant {
        table: &'static str,
        row: usize,
        msg: String,
    },

    #[error("gmd branch {branch}: missing coordinates for ac bus {bus}")]
    MissingCoordinates { branch: usize, bus: usize },

    #[error("dc network component containing gmd buses {nodes:?} has no path to ground")]
    SingularDc { nodes: Vec<usize> },

    #[error("dc factorization failed at row {row} (pivot {pivot:e})")]
    Factorization { row: usize, pivot: f64 },

    #[error("transformer branch {branch}: winding {winding} branch {gmd_branch} not present in solution")]
    MissingWinding {
        branch: usize,
        winding: &'static str,
        gmd_branch: usize,
    },

    #[error("ac bus {bus} is islanded from every slack bus")]
    Islanded { bus: usize },

    #[error("power flow did not converge: {0}")]
    NonConvergence(ConvergenceReport),

    #[error("field scenario: {0}")]
    Scenario(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for problems with the inputs themselves, as opposed to analyses
    /// that ran but failed (non-convergence, singular networks).
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::SingularDc { .. }
                | Error::Factorization { .. }
                | Error::Islanded { .. }
                | Error::NonConvergence(_)
        )
    }
}
