//! The repeat-until-accept design loop.
//!
//! Each iteration draws fresh scenarios, solves the sampled program, and
//! submits the candidate decision to a feasibility check: either the
//! randomized counting oracle ([`rvo`]) on fresh samples, or the exact
//! violation test for problems whose violation law is known in closed form.
//! The loop exits at the first accepted candidate or at the iteration cap.
//!
//! All randomness is derived from counter-based streams keyed by
//! (seed, iteration, role, sample index), so a run reproduces bit-for-bit
//! regardless of how many threads evaluate the oracle samples.

use crate::bounds::oracle_threshold;
use crate::dimensioning::ScenarioConfig;
use crate::error::{Error, Result};
use crate::problems::ScenarioProblem;
use crate::rng::{sample_stream, StreamRole};
use crate::types::Probability;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Oracle samples are drawn and counted in deterministic index chunks of
/// this size; once the count exceeds the acceptance threshold, later chunks
/// are skipped (the flag can no longer change).
const ORACLE_CHUNK: u64 = 4096;

/// Decision of one feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    /// Accepted: the violation count stayed within the threshold.
    pub flag: bool,
    /// Violations observed among the samples actually drawn.
    pub violation_count: u64,
    /// Samples actually drawn. Smaller than the oracle budget when the
    /// count already exceeded the threshold (an early stop never changes
    /// the flag); 0 for the exact check, which draws nothing.
    pub samples_used: u64,
    /// `violation_count` over the full oracle budget: the empirical
    /// violation level, or a lower bound on it after an early stop
    /// (detectable as `samples_used` below the budget). For the exact
    /// check, the exact violation probability.
    pub empirical_violation: Probability,
}

/// Trace of one loop iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Objective of the scenario solve this iteration.
    pub objective: f64,
    pub oracle: OracleOutcome,
    pub solve_ms: u64,
    pub oracle_ms: u64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// A candidate was accepted.
    Returned,
    /// The iteration cap was reached with every candidate rejected.
    CapExceeded,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Returned => "returned",
            RunStatus::CapExceeded => "cap-exceeded",
        })
    }
}

/// Full trace of one run of the design loop.
///
/// `exit_iteration` equals `per_iteration.len()`; the last record's flag is
/// true exactly when the status is `Returned`. On `CapExceeded` the decision
/// fields carry the last (rejected) candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub theta_star: Vec<f64>,
    pub objective: f64,
    pub exit_iteration: u64,
    pub per_iteration: Vec<IterationRecord>,
    pub status: RunStatus,
}

/// Which feasibility check drives the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Exact violation test; needs a problem with a closed-form law.
    Dvo,
    /// Randomized counting oracle on fresh samples.
    #[default]
    Rvo,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dvo" => Ok(Algorithm::Dvo),
            "rvo" => Ok(Algorithm::Rvo),
            other => Err(format!("unknown algorithm {other:?}; expected dvo or rvo")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Dvo => "dvo",
            Algorithm::Rvo => "rvo",
        })
    }
}

/// Randomized violation oracle: draw `oracle_samples` fresh samples, count
/// constraint violations at `theta`, and accept iff the count stays within
/// `floor(eps_prime * oracle_samples)`.
///
/// Samples come from the oracle-role streams of (`seed`, `iteration`), so
/// they are independent of every design draw and of each other. Chunks are
/// evaluated in parallel; the outcome is identical for any thread count.
pub fn rvo<P: ScenarioProblem>(
    problem: &P,
    theta: &[f64],
    oracle_samples: u64,
    eps_prime: Probability,
    seed: u64,
    iteration: u64,
) -> Result<OracleOutcome> {
    if oracle_samples < 1 {
        return Err(Error::domain("rvo", "oracle budget must be >= 1"));
    }
    let threshold = oracle_threshold(eps_prime, oracle_samples);
    let mut violation_count = 0u64;
    let mut samples_used = 0u64;
    while samples_used < oracle_samples {
        let stop = (samples_used + ORACLE_CHUNK).min(oracle_samples);
        violation_count += (samples_used..stop)
            .into_par_iter()
            .map(|index| {
                let mut rng = sample_stream(seed, iteration, StreamRole::Oracle, index);
                let q = problem.sample(&mut rng);
                u64::from(problem.constraint_value(theta, &q) > 0.0)
            })
            .sum::<u64>();
        samples_used = stop;
        if violation_count > threshold {
            break;
        }
    }
    Ok(OracleOutcome {
        flag: violation_count <= threshold,
        violation_count,
        samples_used,
        empirical_violation: Probability::new_unchecked(
            violation_count as f64 / oracle_samples as f64,
        ),
    })
}

fn design_samples<P: ScenarioProblem>(problem: &P, scenarios: u64, seed: u64, iteration: u64) -> Vec<P::Sample> {
    (0..scenarios)
        .map(|index| {
            let mut rng = sample_stream(seed, iteration, StreamRole::Design, index);
            problem.sample(&mut rng)
        })
        .collect()
}

fn solve_step<P: ScenarioProblem>(
    problem: &P,
    samples: &[P::Sample],
    iteration: u64,
) -> Result<(Vec<f64>, f64)> {
    let out = problem.solve(samples)?;
    let theta = out
        .require_optimal(&format!("scenario step at iteration {iteration}"))?
        .to_vec();
    let objective = out.objective.expect("optimal outcome carries an objective");
    Ok((theta, objective))
}

fn finish(
    theta: Vec<f64>,
    objective: f64,
    per_iteration: Vec<IterationRecord>,
    status: RunStatus,
) -> RunResult {
    RunResult {
        theta_star: theta,
        objective,
        exit_iteration: per_iteration.len() as u64,
        per_iteration,
        status,
    }
}

/// Design loop with the exact violation test: keep resampling and resolving
/// until the candidate's true violation probability is at most `eps`.
/// Returned solutions therefore satisfy the level exactly, not just with
/// high confidence. Only problems exposing `analytic_violation` qualify.
pub fn run_dvo<P: ScenarioProblem>(
    problem: &P,
    scenarios: u64,
    eps: Probability,
    cap: u64,
    seed: u64,
) -> Result<RunResult> {
    if cap < 1 {
        return Err(Error::domain("run_dvo", "iteration cap must be >= 1"));
    }
    if scenarios < problem.decision_len() as u64 {
        return Err(Error::domain(
            "run_dvo",
            format!(
                "need at least {} scenarios for this problem, got {scenarios}",
                problem.decision_len()
            ),
        ));
    }
    let mut per_iteration = Vec::new();
    let mut last: Option<(Vec<f64>, f64)> = None;
    for iteration in 1..=cap {
        let solve_start = Instant::now();
        let samples = design_samples(problem, scenarios, seed, iteration);
        let (theta, objective) = solve_step(problem, &samples, iteration)?;
        let solve_ms = solve_start.elapsed().as_millis() as u64;

        let oracle_start = Instant::now();
        let violation = problem.analytic_violation(&theta).ok_or_else(|| Error::Capability {
            msg: "the exact violation test needs a problem with a closed-form violation law; \
                  use the randomized oracle instead"
                .to_string(),
        })?;
        let flag = violation.value() <= eps.value();
        let oracle = OracleOutcome {
            flag,
            violation_count: 0,
            samples_used: 0,
            empirical_violation: violation,
        };
        let oracle_ms = oracle_start.elapsed().as_millis() as u64;

        per_iteration.push(IterationRecord { objective, oracle, solve_ms, oracle_ms });
        if flag {
            return Ok(finish(theta, objective, per_iteration, RunStatus::Returned));
        }
        last = Some((theta, objective));
    }
    let (theta, objective) = last.expect("cap >= 1 yields at least one iterate");
    Ok(finish(theta, objective, per_iteration, RunStatus::CapExceeded))
}

/// Design loop with the randomized counting oracle, the fully
/// sampling-based algorithm. Dimensions, levels, cap, and seed all come
/// from the configuration.
pub fn run_rvo<P: ScenarioProblem>(problem: &P, config: &ScenarioConfig) -> Result<RunResult> {
    let dims = config.dims();
    if problem.decision_len() as u64 != dims.n() {
        return Err(Error::Capability {
            msg: format!(
                "configuration is dimensioned for n = {} but the problem has decision length {}",
                dims.n(),
                problem.decision_len()
            ),
        });
    }
    let eps_prime = config.levels().eps_prime();
    let seed = config.seed();
    let mut per_iteration = Vec::new();
    let mut last: Option<(Vec<f64>, f64)> = None;
    for iteration in 1..=config.iteration_cap() {
        let solve_start = Instant::now();
        let samples = design_samples(problem, dims.scenarios(), seed, iteration);
        let (theta, objective) = solve_step(problem, &samples, iteration)?;
        let solve_ms = solve_start.elapsed().as_millis() as u64;

        let oracle_start = Instant::now();
        let oracle = rvo(problem, &theta, dims.oracle_samples(), eps_prime, seed, iteration)?;
        let oracle_ms = oracle_start.elapsed().as_millis() as u64;

        let flag = oracle.flag;
        per_iteration.push(IterationRecord { objective, oracle, solve_ms, oracle_ms });
        if flag {
            return Ok(finish(theta, objective, per_iteration, RunStatus::Returned));
        }
        last = Some((theta, objective));
    }
    let (theta, objective) = last.expect("cap >= 1 yields at least one iterate");
    Ok(finish(theta, objective, per_iteration, RunStatus::CapExceeded))
}

/// Run the loop with the chosen feasibility check, everything taken from
/// the configuration.
pub fn run<P: ScenarioProblem>(
    problem: &P,
    config: &ScenarioConfig,
    algorithm: Algorithm,
) -> Result<RunResult> {
    match algorithm {
        Algorithm::Rvo => run_rvo(problem, config),
        Algorithm::Dvo => run_dvo(
            problem,
            config.dims().scenarios(),
            config.levels().eps(),
            config.iteration_cap(),
            config.seed(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{DesignDims, Levels};
    use crate::problems::{SyntheticFs1d, TransportNetworkInstance};

    fn prob(p: f64) -> Probability {
        Probability::new(p).unwrap()
    }

    fn config(n: u64, scenarios: u64, oracle: u64, eps: f64, eps_prime: f64, cap: u64, seed: u64) -> ScenarioConfig {
        ScenarioConfig::new(
            DesignDims::new(n, scenarios, oracle).unwrap(),
            Levels::new(eps, eps_prime, 1e-6).unwrap(),
            cap,
            seed,
        )
        .unwrap()
    }

    /// Violation count the oracle should see, recomputed directly from the
    /// same streams.
    fn direct_count(theta: f64, oracle_samples: u64, seed: u64, iteration: u64) -> u64 {
        let problem = SyntheticFs1d::default();
        (0..oracle_samples)
            .filter(|&i| {
                let mut rng = sample_stream(seed, iteration, StreamRole::Oracle, i);
                let q = problem.sample(&mut rng);
                problem.constraint_value(&[theta], &q) > 0.0
            })
            .count() as u64
    }

    #[test]
    fn oracle_accepts_all_feasible() {
        // theta = 1 dominates every sample in [0, 1)
        let out = rvo(&SyntheticFs1d::default(), &[1.0], 50, prob(0.1), 3, 1).unwrap();
        assert!(out.flag);
        assert_eq!(out.violation_count, 0);
        assert_eq!(out.samples_used, 50);
        assert_eq!(out.empirical_violation.value(), 0.0);
    }

    #[test]
    fn oracle_boundary_count_is_accepted() {
        // threshold floor(0.3 * 10) = 3: a count of exactly 3 must pass and
        // a count of 4 must fail; find seeds realizing each count
        let problem = SyntheticFs1d::default();
        let mut tested_boundary = false;
        let mut tested_above = false;
        for seed in 0..500u64 {
            let count = direct_count(0.7, 10, seed, 1);
            if count == 3 && !tested_boundary {
                let out = rvo(&problem, &[0.7], 10, prob(0.3), seed, 1).unwrap();
                assert!(out.flag, "count 3 of 10 at eps_prime 0.3 must be accepted");
                assert_eq!(out.violation_count, 3);
                tested_boundary = true;
            }
            if count == 4 && !tested_above {
                let out = rvo(&problem, &[0.7], 10, prob(0.3), seed, 1).unwrap();
                assert!(!out.flag, "count 4 of 10 at eps_prime 0.3 must be rejected");
                tested_above = true;
            }
            if tested_boundary && tested_above {
                return;
            }
        }
        panic!("no seed produced the boundary counts");
    }

    #[test]
    fn zero_eps_prime_rejects_any_violation() {
        let problem = SyntheticFs1d::default();
        for seed in 0..100u64 {
            let count = direct_count(0.999, 2000, seed, 1);
            let out = rvo(&problem, &[0.999], 2000, Probability::ZERO, seed, 1).unwrap();
            assert_eq!(out.flag, count == 0, "seed {seed}");
            if count > 0 {
                return;
            }
        }
        panic!("no seed produced a violation");
    }

    #[test]
    fn oracle_short_circuits_once_threshold_is_unreachable() {
        // theta = 0 violates on every draw; the first chunk already decides
        let out = rvo(&SyntheticFs1d::default(), &[0.0], 100_000, Probability::ZERO, 11, 1).unwrap();
        assert!(!out.flag);
        assert_eq!(out.samples_used, 4096);
        assert_eq!(out.violation_count, 4096);
        // reported level is the lower bound count / budget
        assert!((out.empirical_violation.value() - 4096.0 / 100_000.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_is_reproducible_and_thread_count_invariant() {
        let problem = SyntheticFs1d::default();
        let base = rvo(&problem, &[0.9], 5000, prob(0.05), 42, 7).unwrap();
        let again = rvo(&problem, &[0.9], 5000, prob(0.05), 42, 7).unwrap();
        assert_eq!(base, again);

        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| rvo(&problem, &[0.9], 5000, prob(0.05), 42, 7).unwrap());
        assert_eq!(base, single);
    }

    #[test]
    fn oracle_rejects_empty_budget() {
        assert!(rvo(&SyntheticFs1d::default(), &[0.5], 0, prob(0.1), 0, 1).is_err());
    }

    #[test]
    fn dvo_returns_solutions_within_the_level() {
        for seed in 0..20u64 {
            let run = run_dvo(&SyntheticFs1d::default(), 10, prob(0.1), 1000, seed).unwrap();
            assert_eq!(run.status, RunStatus::Returned);
            let v = SyntheticFs1d::default().analytic_violation(&run.theta_star).unwrap();
            assert!(v.value() <= 0.1, "seed {seed}: violation {v}");
            assert_eq!(run.exit_iteration, run.per_iteration.len() as u64);
            let last = run.per_iteration.last().unwrap();
            assert!(last.oracle.flag);
            assert_eq!(last.oracle.samples_used, 0);
            assert_eq!(last.oracle.violation_count, 0);
            // every earlier iteration was a rejection
            assert!(run.per_iteration[..run.per_iteration.len() - 1]
                .iter()
                .all(|r| !r.oracle.flag));
        }
    }

    #[test]
    fn dvo_with_full_level_exits_immediately() {
        let run = run_dvo(&SyntheticFs1d::default(), 5, Probability::ONE, 50, 3).unwrap();
        assert_eq!(run.status, RunStatus::Returned);
        assert_eq!(run.exit_iteration, 1);
    }

    #[test]
    fn dvo_needs_a_closed_form_law() {
        let problem = TransportNetworkInstance::canonical();
        let err = run_dvo(&problem, 8, prob(0.5), 3, 0).unwrap_err();
        assert!(matches!(err, Error::Capability { .. }), "got {err}");
    }

    #[test]
    fn dvo_rejects_undersized_designs() {
        let err = run_dvo(&TransportNetworkInstance::canonical(), 4, prob(0.5), 3, 0).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }), "got {err}");
    }

    #[test]
    fn rvo_run_checks_problem_dimension() {
        let cfg = config(2, 5, 10, 0.3, 0.3, 10, 0);
        let err = run_rvo(&SyntheticFs1d::default(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Capability { .. }), "got {err}");
    }

    #[test]
    fn rvo_run_cap_exceeded_keeps_full_trace() {
        // eps_prime 0 with a large oracle budget rejects essentially every
        // candidate; find a seed where all three iterations reject
        for seed in 0..50u64 {
            let cfg = config(1, 5, 500, 0.1, 0.0, 3, seed);
            let run = run_rvo(&SyntheticFs1d::default(), &cfg).unwrap();
            if run.status == RunStatus::CapExceeded {
                assert_eq!(run.exit_iteration, 3);
                assert_eq!(run.per_iteration.len(), 3);
                assert!(run.per_iteration.iter().all(|r| !r.oracle.flag));
                assert!(run.theta_star[0] < 1.0);
                return;
            }
        }
        panic!("no seed rejected at every iteration");
    }

    #[test]
    fn rvo_run_returns_and_reproduces() {
        let cfg = config(1, 5, 200, 0.3, 0.3, 256, 7);
        let problem = SyntheticFs1d::default();
        let a = run_rvo(&problem, &cfg).unwrap();
        let b = run_rvo(&problem, &cfg).unwrap();
        assert_eq!(a.status, RunStatus::Returned);
        assert_eq!(a.theta_star, b.theta_star);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.exit_iteration, b.exit_iteration);
        assert_eq!(
            a.per_iteration.iter().map(|r| &r.oracle).collect::<Vec<_>>(),
            b.per_iteration.iter().map(|r| &r.oracle).collect::<Vec<_>>()
        );
        let last = a.per_iteration.last().unwrap();
        assert!(last.oracle.flag);
        assert!(a.per_iteration[..a.per_iteration.len() - 1].iter().all(|r| !r.oracle.flag));
    }

    #[test]
    fn rvo_run_with_full_level_exits_immediately() {
        let cfg = config(1, 5, 100, 1.0, 1.0, 10, 0);
        let run = run_rvo(&SyntheticFs1d::default(), &cfg).unwrap();
        assert_eq!(run.status, RunStatus::Returned);
        assert_eq!(run.exit_iteration, 1);
    }

    #[test]
    fn dispatcher_selects_the_algorithm() {
        let cfg = config(1, 10, 50, 0.2, 0.1, 400, 5);
        let dvo = run(&SyntheticFs1d::default(), &cfg, Algorithm::Dvo).unwrap();
        let rvo_run = run(&SyntheticFs1d::default(), &cfg, Algorithm::Rvo).unwrap();
        // the exact test draws no oracle samples, the randomized one does
        assert!(dvo.per_iteration.iter().all(|r| r.oracle.samples_used == 0));
        assert!(rvo_run.per_iteration.iter().all(|r| r.oracle.samples_used > 0));
    }

    #[test]
    fn statuses_serialize_in_kebab_case() {
        assert_eq!(serde_json::to_string(&RunStatus::CapExceeded).unwrap(), "\"cap-exceeded\"");
        assert_eq!(serde_json::to_string(&RunStatus::Returned).unwrap(), "\"returned\"");
        assert_eq!(serde_json::to_string(&Algorithm::Rvo).unwrap(), "\"rvo\"");
        assert_eq!("dvo".parse::<Algorithm>().unwrap(), Algorithm::Dvo);
        assert!("exact".parse::<Algorithm>().is_err());
        assert_eq!(RunStatus::CapExceeded.to_string(), "cap-exceeded");
    }
}
