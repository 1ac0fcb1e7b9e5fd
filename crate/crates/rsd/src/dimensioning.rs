//! Sizing routines: inverting the feasibility bounds to pick sample counts.
//!
//! Given a decision dimension and requested levels, these functions find the
//! minimal scenario count for a one-shot design, the minimal oracle size for
//! the repetitive loop via the closed-form sizing inequality, expected-cost
//! tradeoff curves over the scenario count, and a complete configuration
//! (dims, levels, iteration cap) ready for the engine.

use crate::bounds::{
    bad_exit_bound_fs, bad_exit_bound_general, beta_eps, h_one, DesignDims, GeneralBadExitBound,
    Levels,
};
use crate::error::{Error, Result};
use crate::types::Probability;
use serde::{Deserialize, Serialize};

/// Everything the engine needs to run the repetitive design loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigMirror", into = "ConfigMirror")]
pub struct ScenarioConfig {
    dims: DesignDims,
    levels: Levels,
    iteration_cap: u64,
    seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ConfigMirror {
    dims: DesignDims,
    levels: Levels,
    iteration_cap: u64,
    seed: u64,
}

impl From<ScenarioConfig> for ConfigMirror {
    fn from(c: ScenarioConfig) -> Self {
        ConfigMirror {
            dims: c.dims,
            levels: c.levels,
            iteration_cap: c.iteration_cap,
            seed: c.seed,
        }
    }
}

impl TryFrom<ConfigMirror> for ScenarioConfig {
    type Error = Error;
    fn try_from(m: ConfigMirror) -> Result<Self> {
        ScenarioConfig::new(m.dims, m.levels, m.iteration_cap, m.seed)
    }
}

impl ScenarioConfig {
    pub fn new(dims: DesignDims, levels: Levels, iteration_cap: u64, seed: u64) -> Result<Self> {
        if iteration_cap < 1 {
            return Err(Error::domain("ScenarioConfig::new", "iteration_cap must be >= 1"));
        }
        Ok(ScenarioConfig { dims, levels, iteration_cap, seed })
    }

    pub fn dims(&self) -> DesignDims {
        self.dims
    }

    pub fn levels(&self) -> Levels {
        self.levels
    }

    pub fn iteration_cap(&self) -> u64 {
        self.iteration_cap
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One point of the scenario-count / expected-repetitions tradeoff.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TradeoffPoint {
    pub scenarios: u64,
    /// Large-oracle bound on expected repetitions, 1/(1 - beta_eps'). `None`
    /// marks an infinite bound (rejection probability 1 at this point).
    pub expected_repetitions_bound: Option<f64>,
}

fn check_sizing_levels(op: &'static str, eps: Probability, beta_target: Probability) -> Result<()> {
    if eps.value() <= 0.0 {
        return Err(Error::domain(op, "eps must be positive"));
    }
    let b = beta_target.value();
    if b <= 0.0 || b >= 1.0 {
        return Err(Error::domain(op, format!("beta_target {b} must lie strictly inside (0, 1)")));
    }
    Ok(())
}

/// Conservative closed-form scenario count for a one-shot design:
/// ceil((2/eps) (ln(1/beta) + n - 1)). Always at least the exact minimum.
pub fn n_plain_closed_form(n: u64, eps: Probability, beta_target: Probability) -> Result<u64> {
    if n < 1 {
        return Err(Error::domain("n_plain_closed_form", "n must be >= 1"));
    }
    check_sizing_levels("n_plain_closed_form", eps, beta_target)?;
    let value = 2.0 / eps.value() * ((1.0 / beta_target.value()).ln() + (n - 1) as f64);
    Ok(value.ceil() as u64)
}

/// Smallest scenario count whose one-shot tail meets the target:
/// min { N >= n : beta_eps(N, n, eps) <= threshold }. Monotonicity of the
/// tail in N permits exponential bracketing plus bisection.
fn smallest_scenarios(n: u64, eps: Probability, threshold: f64) -> Result<u64> {
    let tail = |scenarios: u64| -> Result<f64> { Ok(beta_eps(scenarios, n, eps)?.value()) };
    if tail(n)? <= threshold {
        return Ok(n);
    }
    let mut hi = n;
    loop {
        hi = hi.saturating_mul(2);
        if tail(hi)? <= threshold {
            break;
        }
        if hi > 1 << 50 {
            return Err(Error::infeasible(
                "smallest_scenarios",
                format!("no scenario count below 2^50 reaches tail {threshold:e}"),
            ));
        }
    }
    let mut lo = hi / 2; // tail(lo) > threshold
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail(mid)? <= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Exact minimal scenario count for a one-shot design at confidence
/// beta_target.
pub fn n_plain_exact(n: u64, eps: Probability, beta_target: Probability) -> Result<u64> {
    if n < 1 {
        return Err(Error::domain("n_plain_exact", "n must be >= 1"));
    }
    check_sizing_levels("n_plain_exact", eps, beta_target)?;
    smallest_scenarios(n, eps, beta_target.value())
}

fn oracle_sizing_terms(scenarios: u64, n: u64, levels: Levels) -> Result<(f64, f64, f64)> {
    let eps = levels.eps().value();
    let delta = eps - levels.eps_prime().value();
    if delta <= 0.0 {
        return Err(Error::domain(
            "min_oracle_samples",
            format!("requires eps > eps_prime, got eps = {eps}, eps_prime = {}", levels.eps_prime()),
        ));
    }
    let rhs = eps / delta * (1.0 / levels.beta_target().value()).ln() + (n - 1) as f64;
    let fixed = scenarios as f64 * (delta / 2.0 + levels.eps_prime().value());
    Ok((delta, rhs, fixed))
}

/// Whether an oracle size satisfies the closed-form sizing inequality
/// oracle_samples * delta + scenarios * (delta/2 + eps') >= (eps/delta) ln(1/beta) + n - 1
/// with delta = eps - eps_prime.
pub fn oracle_sizing_inequality_holds(
    scenarios: u64,
    n: u64,
    levels: Levels,
    oracle_samples: u64,
) -> Result<bool> {
    let (delta, rhs, fixed) = oracle_sizing_terms(scenarios, n, levels)?;
    Ok(oracle_samples as f64 * delta + fixed >= rhs)
}

/// Minimal oracle size satisfying the closed-form sizing inequality, floored
/// at 1. Exact inversion: the returned size satisfies the inequality and
/// (when above 1) the size minus one violates it.
pub fn min_oracle_samples(scenarios: u64, n: u64, levels: Levels) -> Result<u64> {
    if n < 1 || scenarios < n {
        return Err(Error::domain(
            "min_oracle_samples",
            format!("need scenarios >= n >= 1, got scenarios = {scenarios}, n = {n}"),
        ));
    }
    let (delta, rhs, fixed) = oracle_sizing_terms(scenarios, n, levels)?;
    let mut candidate = (((rhs - fixed) / delta).ceil()).max(1.0) as u64;
    // settle onto the exact fixpoint of the f64 inequality
    while candidate as f64 * delta + fixed < rhs {
        candidate += 1;
    }
    while candidate > 1 && (candidate - 1) as f64 * delta + fixed >= rhs {
        candidate -= 1;
    }
    Ok(candidate)
}

/// Expected-repetitions bound along a log-spaced grid of scenario counts.
pub fn tradeoff_curve(
    n: u64,
    eps_prime: Probability,
    scenario_range: (u64, u64),
    points: u32,
) -> Result<Vec<TradeoffPoint>> {
    let (lo, hi) = scenario_range;
    if n < 1 || lo < n || hi < lo {
        return Err(Error::domain(
            "tradeoff_curve",
            format!("need range.hi >= range.lo >= n >= 1, got n = {n}, range = ({lo}, {hi})"),
        ));
    }
    if points < 1 {
        return Err(Error::domain("tradeoff_curve", "points must be >= 1"));
    }
    let mut grid: Vec<u64> = if lo == hi || points == 1 {
        vec![lo]
    } else {
        let (ln_lo, ln_hi) = ((lo as f64).ln(), (hi as f64).ln());
        (0..points)
            .map(|j| {
                let t = j as f64 / (points - 1) as f64;
                ((ln_lo + t * (ln_hi - ln_lo)).exp()).round() as u64
            })
            .collect()
    };
    grid[0] = lo;
    *grid.last_mut().unwrap() = hi;
    grid.sort_unstable();
    grid.dedup();

    grid.into_iter()
        .map(|scenarios| {
            let tail = beta_eps(scenarios, n, eps_prime)?.value();
            let bound = if tail >= 1.0 { None } else { Some(1.0 / (1.0 - tail)) };
            Ok(TradeoffPoint { scenarios, expected_repetitions_bound: bound })
        })
        .collect()
}

/// Smallest iteration cap k with rejection^k <= beta_target, so that the
/// loop completes within the cap except with probability at most the target.
pub fn iteration_cap(rejection: Probability, beta_target: Probability) -> Result<u64> {
    let b = beta_target.value();
    if b <= 0.0 || b >= 1.0 {
        return Err(Error::domain("iteration_cap", "beta_target must lie strictly inside (0, 1)"));
    }
    let r = rejection.value();
    if r >= 1.0 {
        return Err(Error::undefined("iteration_cap", "rejection probability 1 never completes"));
    }
    if r == 0.0 {
        return Ok(1);
    }
    let mut k = (b.ln() / r.ln()).ceil().max(1.0) as u64;
    while r.powf(k as f64) > b {
        k += 1;
    }
    while k > 1 && r.powf((k - 1) as f64) <= b {
        k -= 1;
    }
    Ok(k)
}

/// Full dimensioning output: the runnable configuration plus the exact
/// bad-exit bounds evaluated at the chosen sizes.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub config: ScenarioConfig,
    /// Exact bad-exit bound for fully supported programs at these sizes.
    pub fs_bad_exit_bound: Probability,
    /// Bad-exit bound valid for general programs at these sizes.
    pub general_bad_exit_bound: GeneralBadExitBound,
    /// Whether the fully-supported bound met beta_target. The closed-form
    /// oracle sizing does not guarantee this at aggressive targets; the flag
    /// reports the exact verification rather than assuming it.
    pub fs_bound_within_target: bool,
    /// Exact expected-repetitions bound 1/(1 - h_one) at the chosen sizes.
    pub expected_repetitions: f64,
    /// The large-oracle surrogate 1/(1 - beta_eps') used to select the
    /// scenario count.
    pub expected_repetitions_asymptotic: f64,
}

fn dimension_at(n: u64, levels: Levels, scenarios: u64) -> Result<DimensionReport> {
    let oracle_samples = min_oracle_samples(scenarios, n, levels)?;
    let dims = DesignDims::new(n, scenarios, oracle_samples)?;
    let rejection = h_one(dims, levels.eps_prime())?;
    let cap = iteration_cap(rejection, levels.beta_target())?;
    let fs = bad_exit_bound_fs(dims, levels)?;
    let general = bad_exit_bound_general(dims, levels)?;
    let surrogate_tail = beta_eps(scenarios, n, levels.eps_prime())?.value();
    Ok(DimensionReport {
        config: ScenarioConfig::new(dims, levels, cap, 0)?,
        fs_bad_exit_bound: fs,
        general_bad_exit_bound: general,
        fs_bound_within_target: fs <= levels.beta_target(),
        expected_repetitions: 1.0 / (1.0 - rejection.value()),
        expected_repetitions_asymptotic: 1.0 / (1.0 - surrogate_tail),
    })
}

fn dimension_levels(
    op: &'static str,
    eps: f64,
    beta_target: f64,
    eps_prime_fraction: f64,
) -> Result<Levels> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(op, format!("eps {eps} must lie strictly inside (0, 1)")));
    }
    if !(eps_prime_fraction > 0.0 && eps_prime_fraction < 1.0) {
        return Err(Error::domain(
            op,
            format!("eps_prime_fraction {eps_prime_fraction} must lie strictly inside (0, 1); 0.5..0.9 recommended"),
        ));
    }
    Levels::new(eps, eps_prime_fraction * eps, beta_target)
}

/// Dimension the full loop: set eps' as a fraction of eps, pick the smallest
/// scenario count whose large-oracle expected-repetitions bound meets the
/// target, size the oracle through the closed-form inequality, derive the
/// iteration cap at confidence beta_target, and report the exact bad-exit
/// bounds for the result.
pub fn dimension_rsd(
    n: u64,
    eps: f64,
    beta_target: f64,
    eps_prime_fraction: f64,
    target_expected_reps: f64,
) -> Result<DimensionReport> {
    let levels = dimension_levels("dimension_rsd", eps, beta_target, eps_prime_fraction)?;
    if !(target_expected_reps > 1.0) {
        return Err(Error::infeasible(
            "dimension_rsd",
            format!(
                "target expected repetitions {target_expected_reps} must exceed 1: \
                 the per-iteration rejection probability is positive for any finite scenario count"
            ),
        ));
    }
    let tail_threshold = 1.0 - 1.0 / target_expected_reps;
    let scenarios = smallest_scenarios(n, levels.eps_prime(), tail_threshold)?;
    dimension_at(n, levels, scenarios)
}

/// Same report as [`dimension_rsd`] with the scenario count pinned by the
/// caller instead of selected from a repetition target.
pub fn dimension_rsd_pinned(
    n: u64,
    eps: f64,
    beta_target: f64,
    eps_prime_fraction: f64,
    scenarios: u64,
) -> Result<DimensionReport> {
    let levels = dimension_levels("dimension_rsd_pinned", eps, beta_target, eps_prime_fraction)?;
    if scenarios < n {
        return Err(Error::domain(
            "dimension_rsd_pinned",
            format!("scenarios {scenarios} must be at least n = {n}"),
        ));
    }
    dimension_at(n, levels, scenarios)
}
