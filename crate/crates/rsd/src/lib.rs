//! Repetitive scenario design: draw scenarios, optimize, then accept or
//! reject the candidate with a fresh randomized feasibility oracle, repeating
//! until acceptance. The crate provides the exact beta and beta-binomial
//! feasibility calculus behind that loop, sizing routines that invert the
//! bounds into concrete sample counts, embedded LP and minimax solvers, two
//! worked scenario programs, and a Monte Carlo harness with a CLI.
//!
//! Start with [`dimensioning::dimension_rsd`] to size a loop, then run it
//! through [`engine`]. The probability calculus lives in [`bounds`]; the
//! underlying special functions in [`special`].

pub mod bounds;
pub mod cli;
pub mod dimensioning;
pub mod engine;
pub mod error;
pub mod harness;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod special;
pub mod types;

pub use bounds::{DesignDims, GeneralBadExitBound, Levels, RuntimeBounds};
pub use dimensioning::{DimensionReport, ScenarioConfig, TradeoffPoint};
pub use engine::{Algorithm, OracleOutcome, RunResult, RunStatus};
pub use error::{Error, Result};
pub use harness::{ExperimentSpec, ExperimentStats, TrialRow};
pub use types::{LogReal, Probability};
