//! Linear programs in row form and the HiGHS relaxation engine.
//!
//! Everything above this module speaks in terms of [`LinearProgram`]; HiGHS
//! only ever sees a fully built problem, so swapping the engine touches this
//! file alone.

use highs::{HighsModelStatus, RowProblem, Sense};

use crate::error::{OtsError, Result};

/// Feasibility residual a returned optimum must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// `min cost·x + offset` subject to `lower ≤ A x ≤ upper` and column bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub offset: f64,
}

impl LinearProgram {
    pub fn add_col(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, lower: f64, upper: f64) -> usize {
        self.rows.push(LpRow { coeffs, lower, upper });
        self.rows.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Worst bound or row violation at `x`. Row violations are divided by the
    /// row's largest coefficient so volt-scaled and per-unit rows compare.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.col_lower[j] - v).max(v - self.col_upper[j]);
        }
        for (row, act) in self.rows.iter().zip(self.activity(x)) {
            let scale = row.coeffs.iter().fold(1.0f64, |m, &(_, a)| m.max(a.abs()));
            worst = worst.max((row.lower - act) / scale).max((act - row.upper) / scale);
        }
        worst
    }

    /// Ratio of the largest to the smallest nonzero coefficient; a cheap
    /// stand-in for a condition number in diagnostics.
    pub fn coefficient_range(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for row in &self.rows {
            for &(_, a) in &row.coeffs {
                if a != 0.0 {
                    lo = lo.min(a.abs());
                    hi = hi.max(a.abs());
                }
            }
        }
        if hi == 0.0 {
            1.0
        } else {
            hi / lo
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless optimal.
    pub primal: Vec<f64>,
    /// Row duals, empty unless optimal.
    pub dual: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn without(status: LpStatus) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        Self {
            status,
            primal: Vec::new(),
            dual: Vec::new(),
            objective,
        }
    }
}

fn run(lp: &LinearProgram, presolve: bool) -> Result<(HighsModelStatus, Vec<f64>, Vec<f64>)> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = (0..lp.num_cols())
        .map(|j| pb.add_column(lp.cost[j], lp.col_lower[j]..=lp.col_upper[j]))
        .collect();
    for row in &lp.rows {
        let coeffs: Vec<_> = row.coeffs.iter().map(|&(j, a)| (cols[j], a)).collect();
        pb.add_row(row.lower..=row.upper, coeffs);
    }
    let mut model = pb.optimise(Sense::Minimise);
    model.make_quiet();
    model.set_option("threads", 1);
    model.set_option("primal_feasibility_tolerance", 1e-9);
    model.set_option("dual_feasibility_tolerance", 1e-9);
    if !presolve {
        model.set_option("presolve", "off");
    }
    let solved = model.try_solve().map_err(|s| OtsError::Numerical {
        msg: format!("HiGHS returned {s:?}"),
        residual: f64::NAN,
        condition: lp.coefficient_range(),
    })?;
    let status = solved.status();
    let sol = solved.get_solution();
    Ok((status, sol.columns().to_vec(), sol.dual_rows().to_vec()))
}

/// Solves `lp` to an optimal basic solution or reports infeasibility or
/// unboundedness. An optimum whose residual exceeds [`RESIDUAL_TOL`] is an
/// error rather than a silently bad answer.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    if lp.num_cols() == 0 {
        let feasible = lp.rows.iter().all(|r| r.lower <= 0.0 && 0.0 <= r.upper);
        return Ok(if feasible {
            LpSolution {
                status: LpStatus::Optimal,
                primal: Vec::new(),
                dual: vec![0.0; lp.num_rows()],
                objective: lp.offset,
            }
        } else {
            LpSolution::without(LpStatus::Infeasible)
        });
    }
    if lp.col_lower.iter().zip(&lp.col_upper).any(|(l, u)| l > u) {
        return Ok(LpSolution::without(LpStatus::Infeasible));
    }
    let (mut status, mut primal, mut dual) = run(lp, true)?;
    if status == HighsModelStatus::UnboundedOrInfeasible {
        (status, primal, dual) = run(lp, false)?;
    }
    match status {
        HighsModelStatus::Optimal => {
            let residual = lp.residual(&primal);
            if residual > RESIDUAL_TOL {
                return Err(OtsError::Numerical {
                    msg: "optimal point violates the constraints".into(),
                    residual,
                    condition: lp.coefficient_range(),
                });
            }
            let objective = lp.objective(&primal);
            Ok(LpSolution {
                status: LpStatus::Optimal,
                primal,
                dual,
                objective,
            })
        }
        HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => {
            Ok(LpSolution::without(LpStatus::Infeasible))
        }
        HighsModelStatus::Unbounded => Ok(LpSolution::without(LpStatus::Unbounded)),
        other => Err(OtsError::Numerical {
            msg: format!("HiGHS stopped with status {other:?}"),
            residual: f64::NAN,
            condition: lp.coefficient_range(),
        }),
    }
}
