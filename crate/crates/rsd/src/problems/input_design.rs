//! Robust finite-horizon input design.
//!
//! The system `x(t+1) = A(q) x(t) + B u(t)` starts at the origin and must be
//! steered close to a target in `T` steps despite interval uncertainty on
//! every entry of the state matrix. With the reach matrix `R(q)` (column `t`
//! is `A(q)^(T-1-t) B`), the scenario program minimizes a level `gamma`
//! bounding `||R(q) u - target||^2 + tradeoff ||u||^2` across sampled `q`.
//! Decision dimension is `T + 1` (the inputs plus the level).

use super::ScenarioProblem;
use crate::error::{Error, Result};
use crate::rng::uniform_in;
use crate::solver::{minimax_quadratic_solve, MinimaxOptions, QuadraticTerm, SolveOutcome, SolveStatus};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Matrices are row-major nested vectors, matching the instance file format.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDesignInstance {
    /// Nominal state matrix, square.
    pub a0: Matrix,
    /// Input column.
    pub b: Vec<f64>,
    /// Target state to reach at the horizon.
    pub target: Vec<f64>,
    /// Number of input steps T; the decision is (u(0)..u(T-1), gamma).
    pub horizon: u32,
    /// Half-width of the entrywise uncertainty interval on the state matrix.
    pub radius: f64,
    /// Input-energy weight in the objective.
    pub tradeoff: f64,
}

impl InputDesignInstance {
    /// The worked six-state instance with horizon 10, radius 0.001, and
    /// energy weight 0.005.
    pub fn canonical() -> Self {
        InputDesignInstance {
            a0: vec![
                vec![-0.7214, -0.0578, 0.2757, 0.7255, 0.2171, 0.3901],
                vec![0.5704, 0.1762, 0.3684, -0.0971, 0.6822, -0.5604],
                vec![-1.3983, -0.1795, 0.1511, 1.0531, -0.1601, 0.9031],
                vec![-0.6308, -0.0058, 0.4422, 0.8169, 0.512, 0.2105],
                vec![0.7539, 0.1423, 0.2039, -0.3757, 0.5088, -0.6081],
                vec![-1.3571, -0.1769, 0.1076, 1.0032, -0.1781, 0.9151],
            ],
            b: vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
            target: vec![1.0, -0.5, 2.0, 1.0, -1.0, 2.0],
            horizon: 10,
            radius: 0.001,
            tradeoff: 0.005,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.state_dim();
        if d == 0 || self.a0.iter().any(|row| row.len() != d) {
            return Err(Error::domain("InputDesignInstance", "state matrix must be square and nonempty"));
        }
        if self.b.len() != d || self.target.len() != d {
            return Err(Error::domain("InputDesignInstance", "input and target must match the state dimension"));
        }
        if self.horizon < 1 {
            return Err(Error::domain("InputDesignInstance", "horizon must be >= 1"));
        }
        if !(self.radius >= 0.0) || !(self.tradeoff >= 0.0) {
            return Err(Error::domain("InputDesignInstance", "radius and tradeoff must be >= 0"));
        }
        Ok(())
    }

    /// Reach matrix of `a0 + q`: column `t` is `(a0 + q)^(T-1-t) b`, built by
    /// repeated multiplication (powers never materialize).
    pub fn reach_matrix(&self, q: &Matrix) -> Matrix {
        let d = self.state_dim();
        let t_steps = self.horizon as usize;
        let mut columns = vec![vec![0.0; d]; t_steps];
        let mut power = self.b.clone(); // (a0+q)^k b
        for k in 0..t_steps {
            columns[t_steps - 1 - k] = power.clone();
            if k + 1 < t_steps {
                let mut next = vec![0.0; d];
                for (i, out) in next.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += (self.a0[i][j] + q[i][j]) * power[j];
                    }
                    *out = acc;
                }
                power = next;
            }
        }
        // transpose columns into a d x T matrix
        let mut reach = vec![vec![0.0; t_steps]; d];
        for (t, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                reach[i][t] = v;
            }
        }
        reach
    }

    /// `||R u - target||^2` expanded into a quadratic in u.
    fn scenario_term(&self, q: &Matrix) -> QuadraticTerm {
        let reach = self.reach_matrix(q);
        let t_steps = self.horizon as usize;
        let d = self.state_dim();
        let mut quadratic = vec![vec![0.0; t_steps]; t_steps];
        for s in 0..t_steps {
            for t in 0..t_steps {
                let mut acc = 0.0;
                for row in reach.iter().take(d) {
                    acc += row[s] * row[t];
                }
                quadratic[s][t] = acc;
            }
        }
        let mut linear = vec![0.0; t_steps];
        for (t, l) in linear.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..d {
                acc += reach[i][t] * self.target[i];
            }
            *l = -2.0 * acc;
        }
        let constant: f64 = self.target.iter().map(|v| v * v).sum();
        QuadraticTerm { quadratic, linear, constant }
    }
}

impl ScenarioProblem for InputDesignInstance {
    type Sample = Matrix;

    fn decision_len(&self) -> usize {
        self.horizon as usize + 1
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Matrix {
        let d = self.state_dim();
        (0..d)
            .map(|_| (0..d).map(|_| uniform_in(rng, -self.radius, self.radius)).collect())
            .collect()
    }

    fn solve(&self, samples: &[Matrix]) -> Result<SolveOutcome> {
        self.validate()?;
        if samples.is_empty() {
            return Err(Error::domain("InputDesignInstance::solve", "need at least one sample"));
        }
        let d = self.state_dim();
        if samples.iter().any(|q| q.len() != d || q.iter().any(|row| row.len() != d)) {
            return Err(Error::domain("InputDesignInstance::solve", "sample shape must match the state matrix"));
        }
        let terms: Vec<QuadraticTerm> = samples.iter().map(|q| self.scenario_term(q)).collect();
        let out = minimax_quadratic_solve(&terms, self.tradeoff, &MinimaxOptions::default())?;
        Ok(match out.status {
            SolveStatus::Optimal => {
                let mut theta = out.solution.expect("optimal outcome carries a solution");
                let gamma = out.objective.expect("optimal outcome carries an objective");
                theta.push(gamma);
                SolveOutcome::optimal(theta, gamma, out.iterations)
            }
            status => SolveOutcome::of_status(status, out.iterations),
        })
    }

    fn constraint_value(&self, theta: &[f64], q: &Matrix) -> f64 {
        let t_steps = self.horizon as usize;
        let (u, gamma) = (&theta[..t_steps], theta[t_steps]);
        let reach = self.reach_matrix(q);
        let mut miss = 0.0;
        for (i, row) in reach.iter().enumerate() {
            let xi: f64 = row.iter().zip(u).map(|(r, v)| r * v).sum();
            let e = xi - self.target[i];
            miss += e * e;
        }
        let energy: f64 = u.iter().map(|v| v * v).sum();
        miss + self.tradeoff * energy - gamma
    }
}

// no analytic violation law: the default None applies
