//! Scenario programs the design loop can run: a synthetic 1-D problem with
//! known violation law, a robust finite-horizon input design, and an
//! uncertain transportation-network LP.

mod input_design;
mod synthetic;
mod transport;

pub use input_design::InputDesignInstance;
pub use synthetic::SyntheticFs1d;
pub use transport::TransportNetworkInstance;

use crate::error::Result;
use crate::solver::SolveOutcome;
use crate::types::Probability;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A scenario program: sample uncertainty, solve the sampled program, and
/// evaluate the constraint function at a candidate decision.
///
/// The engine treats `constraint_value(theta, q) > 0` as a violation; `<= 0`
/// is satisfaction. Implementations must be deterministic given the RNG
/// stream and immutable after construction (the engine samples from several
/// threads).
pub trait ScenarioProblem: Sync {
    type Sample: Clone + Send + Sync;

    /// Decision dimension n.
    fn decision_len(&self) -> usize;

    /// Draw one uncertainty sample from the problem's distribution.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Self::Sample;

    /// Solve `min c . theta` subject to `constraint_value(theta, q) <= 0`
    /// for every given sample. An `Optimal` outcome carries theta of length
    /// `decision_len`.
    fn solve(&self, samples: &[Self::Sample]) -> Result<SolveOutcome>;

    /// The constraint function f(theta, q).
    fn constraint_value(&self, theta: &[f64], sample: &Self::Sample) -> f64;

    /// Exact violation probability at theta, for problems where the law is
    /// known in closed form.
    fn analytic_violation(&self, _theta: &[f64]) -> Option<Probability> {
        None
    }
}

/// Selector for the built-in problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    Synthetic,
    InputDesign,
    Transport,
}

impl std::str::FromStr for ProblemId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "synthetic" => Ok(ProblemId::Synthetic),
            "input-design" => Ok(ProblemId::InputDesign),
            "transport" => Ok(ProblemId::Transport),
            other => Err(format!("unknown problem {other:?}; expected synthetic, input-design, or transport")),
        }
    }
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ProblemId::Synthetic => "synthetic",
            ProblemId::InputDesign => "input-design",
            ProblemId::Transport => "transport",
        };
        f.write_str(name)
    }
}
