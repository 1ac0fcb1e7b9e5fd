//! Uncertain linear transportation network.
//!
//! Four buffers exchange content at designed rates; three of the physical
//! rates carry additive truncated-normal uncertainty. Stability with
//! peak-to-peak gain below `gamma` is certified by a vector `xi >= 0`
//! satisfying strict linear inequalities in the system matrices. Products of
//! design rates with `xi` entries are replaced by variables `mu` to obtain an
//! LP in `theta = (xi, mu, gamma)`, dimension 8; the designed rates are
//! recovered afterwards as ratios. Strictness is enforced with a fixed
//! margin on the uncertainty-dependent rows and the gain row.

use super::ScenarioProblem;
use crate::error::{Error, Result};
use crate::rng::standard_normal_pair;
use crate::solver::{lp_solve, LinearProgram, SolveOutcome, SolverOptions};
use crate::types::Probability;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Variable layout: [xi1, xi2, xi3, xi4, mu12, mu32, mu23, gamma].
pub const DECISION_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportNetworkInstance {
    /// Per-coordinate standard deviation of the uncertainty.
    pub sigma: f64,
    /// Truncation: samples are redrawn until the max-norm stays within this.
    pub clip: f64,
    /// Margin standing in for strict inequality in the certificate rows.
    pub margin: f64,
}

impl Default for TransportNetworkInstance {
    fn default() -> Self {
        TransportNetworkInstance::canonical()
    }
}

impl TransportNetworkInstance {
    pub fn canonical() -> Self {
        TransportNetworkInstance { sigma: 0.2, clip: 1.0, margin: 1e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain("TransportNetworkInstance", "sigma must be positive"));
        }
        if !(self.clip > 0.0) || !self.clip.is_finite() {
            return Err(Error::domain("TransportNetworkInstance", "clip must be positive"));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(Error::domain("TransportNetworkInstance", "margin must be >= 0"));
        }
        Ok(())
    }

    /// The four certificate rows for one uncertainty sample, as coefficients
    /// over the decision vector plus the constant offset of each row. A row
    /// certifies when `coeffs . theta + offset < 0`.
    fn certificate_rows(&self, q: &[f64; 3]) -> [([f64; DECISION_LEN], f64); 4] {
        let (q1, q2, q3) = (q[0], q[1], q[2]);
        // state-matrix action on xi with designed-rate products replaced by mu
        [
            ([-3.0 - q1, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 0.0),
            ([0.0, 0.0, 0.0, 0.0, -1.0, -1.0, 1.0, 0.0], 1.0),
            ([2.0 + q1, 0.0, -2.0 - q3, 1.0 + q2, 0.0, 1.0, -1.0, 0.0], 0.0),
            ([0.0, 0.0, 2.0 + q3, -5.0 - q2, 0.0, 0.0, 0.0, 0.0], 0.0),
        ]
    }

    /// Assemble the scenario LP: gain row, rate couplings, then the four
    /// certificate rows per sample.
    pub fn build_lp(&self, samples: &[[f64; 3]]) -> Result<LinearProgram> {
        self.validate()?;
        if samples.is_empty() {
            return Err(Error::domain("TransportNetworkInstance::build_lp", "need at least one sample"));
        }
        if let Some(q) = samples.iter().find(|q| q.iter().any(|v| v.abs() > self.clip)) {
            return Err(Error::domain(
                "TransportNetworkInstance::build_lp",
                format!("sample {q:?} exceeds the truncation bound {}", self.clip),
            ));
        }
        let mut objective = vec![0.0; DECISION_LEN];
        objective[7] = 1.0;
        let mut lp = LinearProgram::new(objective);
        lp.set_free(7);
        // total content below the gain level: sum xi - gamma < 0
        lp.push_le(vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, -1.0], -self.margin);
        // products stay consistent with rates in [0, 1]: mu <= its xi
        lp.push_le(vec![0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 0.0);
        lp.push_le(vec![0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 0.0);
        lp.push_le(vec![0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 0.0);
        for q in samples {
            for (coeffs, offset) in self.certificate_rows(q) {
                lp.push_le(coeffs.to_vec(), -offset - self.margin);
            }
        }
        Ok(lp)
    }

    /// Recover the designed rates (l12, l32, l23) from the decision vector.
    /// Degenerate buffer certificates (xi2 or xi3 at zero) make the ratios
    /// undefined and are reported as an error.
    pub fn transfer_rates(&self, theta: &[f64]) -> Result<[f64; 3]> {
        let (xi2, xi3) = (theta[1], theta[2]);
        if xi2 < 1e-12 || xi3 < 1e-12 {
            return Err(Error::undefined(
                "transfer_rates",
                format!("certificate entries xi2 = {xi2:e}, xi3 = {xi3:e} are too small to divide by"),
            ));
        }
        Ok([theta[4] / xi2, theta[5] / xi2, theta[6] / xi3])
    }

    /// State matrix at designed rates `l = (l12, l32, l23)` and uncertainty
    /// `q`; stability certificates require it to be Metzler.
    pub fn state_matrix(&self, rates: &[f64; 3], q: &[f64; 3]) -> [[f64; 4]; 4] {
        let (l12, l32, l23) = (rates[0], rates[1], rates[2]);
        let (q1, q2, q3) = (q[0], q[1], q[2]);
        [
            [-1.0 - (2.0 + q1), l12, 0.0, 0.0],
            [0.0, -l12 - l32, l23, 0.0],
            [2.0 + q1, l32, -l23 - (2.0 + q3), 1.0 + q2],
            [0.0, 0.0, 2.0 + q3, -4.0 - (1.0 + q2)],
        ]
    }
}

impl ScenarioProblem for TransportNetworkInstance {
    type Sample = [f64; 3];

    fn decision_len(&self) -> usize {
        DECISION_LEN
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let (a, b) = standard_normal_pair(rng);
            let (c, _) = standard_normal_pair(rng);
            let q = [a * self.sigma, b * self.sigma, c * self.sigma];
            if q.iter().all(|v| v.abs() <= self.clip) {
                return q;
            }
        }
    }

    fn solve(&self, samples: &[[f64; 3]]) -> Result<SolveOutcome> {
        let lp = self.build_lp(samples)?;
        lp_solve(&lp, &SolverOptions::default())
    }

    /// Largest certificate-row value at this sample, margin included: > 0
    /// means some uncertainty-dependent row fails. The gain and coupling
    /// rows carry no uncertainty and count as part of the decision domain.
    fn constraint_value(&self, theta: &[f64], q: &[f64; 3]) -> f64 {
        self.certificate_rows(q)
            .iter()
            .map(|(coeffs, offset)| {
                let lhs: f64 = coeffs.iter().zip(theta).map(|(a, v)| a * v).sum();
                lhs + offset + self.margin
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn analytic_violation(&self, _theta: &[f64]) -> Option<Probability> {
        None
    }
}
