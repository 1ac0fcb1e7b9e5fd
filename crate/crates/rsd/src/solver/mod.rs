//! Embedded convex solvers.
//!
//! [`lp_solve`] is a dense two-phase primal simplex with Bland's rule; tall
//! programs are handled through a row-activation outer loop that solves on a
//! working subset and pulls in violated rows until the full program is
//! satisfied. [`minimax_quadratic_solve`] minimizes the pointwise maximum of
//! convex quadratics by cutting planes over an auto-expanding box, using the
//! simplex as its master solver.

mod kelley;
mod simplex;

pub use kelley::{minimax_quadratic_solve, MinimaxOptions, QuadraticTerm};
pub use simplex::lp_solve;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Constraint direction. Row senses are `<=` or `=`; encode `>=` by negating
/// the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSense {
    Le,
    Eq,
}

/// One constraint row: `coeffs . x (sense) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Lower bound kind for a variable: zero or unbounded below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarLower {
    Zero,
    Free,
}

/// A linear program `min objective . x` subject to rows and variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<ConstraintRow>,
    pub lower: Vec<VarLower>,
    /// Optional per-variable upper bounds, enforced as internal rows.
    pub upper: Vec<Option<f64>>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { objective, rows: Vec::new(), lower: vec![VarLower::Zero; n], upper: vec![None; n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.rows.push(ConstraintRow { coeffs, sense: RowSense::Le, rhs });
    }

    pub fn push_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.rows.push(ConstraintRow { coeffs, sense: RowSense::Eq, rhs });
    }

    pub fn set_free(&mut self, var: usize) {
        self.lower[var] = VarLower::Free;
    }

    pub fn set_upper(&mut self, var: usize, upper: f64) {
        self.upper[var] = Some(upper);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::domain("lp_solve", "program has no variables"));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::domain("lp_solve", "bound vectors must match variable count"));
        }
        if !self.objective.iter().all(|c| c.is_finite()) {
            return Err(Error::domain("lp_solve", "objective coefficients must be finite"));
        }
        if !self.upper.iter().flatten().all(|u| u.is_finite()) {
            return Err(Error::domain("lp_solve", "upper bounds must be finite"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::domain(
                    "lp_solve",
                    format!("row {i} has {} coefficients, expected {n}", row.coeffs.len()),
                ));
            }
            if !row.coeffs.iter().all(|c| c.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::domain("lp_solve", format!("row {i} contains a non-finite entry")));
            }
        }
        Ok(())
    }

    /// Scale for feasibility checks: 1 + the largest right-hand-side
    /// magnitude, upper bounds included.
    pub fn residual_scale(&self) -> f64 {
        let rows = self.rows.iter().map(|r| r.rhs.abs());
        let uppers = self.upper.iter().flatten().map(|u| u.abs());
        1.0 + rows.chain(uppers).fold(0.0, f64::max)
    }

    /// Largest constraint violation of `x`, bounds included.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let gap = match row.sense {
                RowSense::Le => lhs - row.rhs,
                RowSense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        for (j, &xj) in x.iter().enumerate() {
            if self.lower[j] == VarLower::Zero {
                worst = worst.max(-xj);
            }
            if let Some(u) = self.upper[j] {
                worst = worst.max(xj - u);
            }
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solver result. `solution` and `objective` are present exactly when the
/// status is `Optimal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub iterations: u64,
}

impl SolveOutcome {
    pub(crate) fn optimal(solution: Vec<f64>, objective: f64, iterations: u64) -> Self {
        SolveOutcome { status: SolveStatus::Optimal, solution: Some(solution), objective: Some(objective), iterations }
    }

    pub(crate) fn of_status(status: SolveStatus, iterations: u64) -> Self {
        SolveOutcome { status, solution: None, objective: None, iterations }
    }

    /// The optimal point, or a solver error naming the actual status.
    pub fn require_optimal(&self, context: &str) -> Result<&[f64]> {
        match (self.status, &self.solution) {
            (SolveStatus::Optimal, Some(x)) => Ok(x),
            _ => Err(Error::Solver { status: format!("{:?}", self.status), context: context.to_string() }),
        }
    }
}

/// Simplex tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Pivot budget per call, both phases combined.
    pub max_pivots: u64,
    /// Row count above which the activation outer loop takes over.
    pub activation_threshold: usize,
    /// Base feasibility tolerance; scaled by `residual_scale`.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_pivots: 200_000, activation_threshold: 200, tol: 1e-9 }
    }
}
