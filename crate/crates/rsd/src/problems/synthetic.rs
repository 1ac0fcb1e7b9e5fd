//! Minimal 1-D scenario program with a closed-form violation law, used to
//! validate the probabilistic machinery end to end.
//!
//! Samples are uniform on [0, 1]; the program is `min theta` subject to
//! `theta >= q` for every sample, so the solution is the sample maximum and
//! its violation probability is exactly `1 - theta`. Every sample set of
//! distinct values has exactly one support constraint, which makes the
//! acceptance and runtime identities of the calculus hold with equality.

use super::ScenarioProblem;
use crate::error::{Error, Result};
use crate::rng::uniform01;
use crate::solver::SolveOutcome;
use crate::types::Probability;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticFs1d;

impl ScenarioProblem for SyntheticFs1d {
    type Sample = f64;

    fn decision_len(&self) -> usize {
        1
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        uniform01(rng)
    }

    fn solve(&self, samples: &[f64]) -> Result<SolveOutcome> {
        let best = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() {
            return Err(Error::domain("SyntheticFs1d::solve", "need at least one sample"));
        }
        Ok(SolveOutcome::optimal(vec![best], best, 1))
    }

    fn constraint_value(&self, theta: &[f64], sample: &f64) -> f64 {
        sample - theta[0]
    }

    fn analytic_violation(&self, theta: &[f64]) -> Option<Probability> {
        Some(Probability::new_unchecked((1.0 - theta[0]).clamp(0.0, 1.0)))
    }
}
