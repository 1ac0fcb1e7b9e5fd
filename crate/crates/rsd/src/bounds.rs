//! Exact feasibility calculus for repetitive scenario design.
//!
//! A design step solves a convex program over `scenarios` random constraint
//! samples; a check step draws `oracle_samples` fresh samples and accepts the
//! candidate when at most floor(eps_prime * oracle_samples) of them are
//! violated. The functions here give the exact beta / beta-binomial laws of
//! that loop: the one-shot infeasibility tail, the per-iteration rejection
//! probability, runtime bounds for the repeat-until-accept process, and
//! bounds on the probability that an accepted candidate still has violation
//! probability above `eps`.
//!
//! Convention used throughout: the oracle acceptance threshold is the integer
//! floor of eps_prime * oracle_samples (an integer count is <= t iff it is
//! <= floor(t)). A continuum-threshold variant is provided separately as a
//! diagnostic because reference values computed without the floor differ in
//! the third digit at realistic sample counts.

use crate::error::{Error, Result};
use crate::special::{beta_binom_cdf, beta_binom_log_pmf, log_beta, reg_inc_beta, KahanSum};
use crate::types::Probability;
use serde::{Deserialize, Serialize};

/// Sample-count layout of one repetitive design: decision dimension `n`,
/// scenario count per design step, oracle draws per check step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DimsMirror", into = "DimsMirror")]
pub struct DesignDims {
    n: u64,
    scenarios: u64,
    oracle_samples: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct DimsMirror {
    n: u64,
    scenarios: u64,
    oracle_samples: u64,
}

impl From<DesignDims> for DimsMirror {
    fn from(d: DesignDims) -> Self {
        DimsMirror { n: d.n, scenarios: d.scenarios, oracle_samples: d.oracle_samples }
    }
}

impl TryFrom<DimsMirror> for DesignDims {
    type Error = Error;
    fn try_from(m: DimsMirror) -> Result<Self> {
        DesignDims::new(m.n, m.scenarios, m.oracle_samples)
    }
}

impl DesignDims {
    pub fn new(n: u64, scenarios: u64, oracle_samples: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("DesignDims::new", "decision dimension must be >= 1"));
        }
        if scenarios < n {
            return Err(Error::domain(
                "DesignDims::new",
                format!("need at least n = {n} scenarios, got {scenarios}"),
            ));
        }
        if oracle_samples < 1 {
            return Err(Error::domain("DesignDims::new", "oracle_samples must be >= 1"));
        }
        Ok(DesignDims { n, scenarios, oracle_samples })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn scenarios(&self) -> u64 {
        self.scenarios
    }

    pub fn oracle_samples(&self) -> u64 {
        self.oracle_samples
    }
}

/// Requested feasibility levels: check level `eps`, oracle level `eps_prime`
/// (must not exceed `eps`), and the confidence target `beta_target` used by
/// the sizing routines.
///
/// `eps` and `eps_prime` accept the closed interval [0, 1]; the degenerate
/// endpoints are meaningful for the bound functions (they collapse to exact
/// identities) even though a practical configuration keeps eps interior.
/// `beta_target` must be strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LevelsMirror", into = "LevelsMirror")]
pub struct Levels {
    eps: Probability,
    eps_prime: Probability,
    beta_target: Probability,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct LevelsMirror {
    eps: f64,
    eps_prime: f64,
    beta_target: f64,
}

impl From<Levels> for LevelsMirror {
    fn from(l: Levels) -> Self {
        LevelsMirror {
            eps: l.eps.value(),
            eps_prime: l.eps_prime.value(),
            beta_target: l.beta_target.value(),
        }
    }
}

impl TryFrom<LevelsMirror> for Levels {
    type Error = Error;
    fn try_from(m: LevelsMirror) -> Result<Self> {
        Levels::new(m.eps, m.eps_prime, m.beta_target)
    }
}

impl Levels {
    pub fn new(eps: f64, eps_prime: f64, beta_target: f64) -> Result<Self> {
        let eps = Probability::new(eps)?;
        let eps_prime = Probability::new(eps_prime)?;
        let beta_target = Probability::new(beta_target)?;
        if eps_prime > eps {
            return Err(Error::domain(
                "Levels::new",
                format!("eps_prime {} must not exceed eps {}", eps_prime, eps),
            ));
        }
        if beta_target.value() <= 0.0 || beta_target.value() >= 1.0 {
            return Err(Error::domain(
                "Levels::new",
                format!("beta_target {} must lie strictly inside (0, 1)", beta_target),
            ));
        }
        Ok(Levels { eps, eps_prime, beta_target })
    }

    pub fn eps(&self) -> Probability {
        self.eps
    }

    pub fn eps_prime(&self) -> Probability {
        self.eps_prime
    }

    pub fn beta_target(&self) -> Probability {
        self.beta_target
    }
}

/// Integer acceptance threshold floor(eps_prime * oracle_samples).
///
/// The product is nudged by one part in 1e12 before flooring so that
/// products which are integers in exact arithmetic but land one ulp low in
/// floating point (0.3 * 10 = 2.999...96) floor to the intended integer.
/// Real sample counts keep the nudge far below one unit.
pub fn oracle_threshold(eps_prime: Probability, oracle_samples: u64) -> u64 {
    let product = eps_prime.value() * oracle_samples as f64;
    let nudged = product * (1.0 + 1e-12) + 1e-12;
    (nudged.floor() as u64).min(oracle_samples)
}

/// One-shot infeasibility tail: the probability that the optimum of a design
/// step over `scenarios` samples has violation probability above `eps`.
/// Equals the regularized incomplete beta I_{1-eps}(N - n + 1, n); exact for
/// programs whose optimum is always determined by n support scenarios, an
/// upper bound otherwise.
pub fn beta_eps(scenarios: u64, n: u64, eps: Probability) -> Result<Probability> {
    if n < 1 || scenarios < n {
        return Err(Error::domain(
            "beta_eps",
            format!("need scenarios >= n >= 1, got scenarios = {scenarios}, n = {n}"),
        ));
    }
    reg_inc_beta(
        (scenarios - n + 1) as f64,
        n as f64,
        eps.complement().value(),
    )
}

fn beta_binom_shapes(dims: DesignDims) -> (f64, f64) {
    (dims.n as f64, (dims.scenarios - dims.n + 1) as f64)
}

/// Probability that one full iteration fails to exit: the oracle counts more
/// than the threshold of violations among its fresh samples. The candidate's
/// violation probability is beta-distributed, the count beta-binomial.
/// Exact for fully supported programs, an upper bound in general.
pub fn h_one(dims: DesignDims, eps_prime: Probability) -> Result<Probability> {
    let z = oracle_threshold(eps_prime, dims.oracle_samples);
    let (alpha, beta) = beta_binom_shapes(dims);
    let cdf = beta_binom_cdf(dims.oracle_samples, alpha, beta, z)?;
    Ok(Probability::new_unchecked((1.0 - cdf.value()).clamp(0.0, 1.0)))
}

/// Probability that an iteration fails to exit or its candidate has true
/// violation probability above `levels.eps`. Satisfies h_eps >= h_one; at
/// eps = 1 the two coincide exactly.
pub fn h_eps(dims: DesignDims, levels: Levels) -> Result<Probability> {
    let z = oracle_threshold(levels.eps_prime, dims.oracle_samples);
    let (alpha, beta) = beta_binom_shapes(dims);
    let total = (dims.scenarios + dims.oracle_samples) as f64;
    let mut joint = KahanSum::new();
    for i in 0..=z {
        let pmf = beta_binom_log_pmf(dims.oracle_samples, alpha, beta, i)?.value();
        // posterior tail weight: count i pulls the candidate's violation law
        // up to Beta(n + i, N + N_o - n - i + 1)
        let weight = reg_inc_beta(
            alpha + i as f64,
            total - alpha - i as f64 + 1.0,
            levels.eps.value(),
        )?;
        joint.add(pmf * weight.value());
    }
    Ok(Probability::new_unchecked((1.0 - joint.value()).clamp(0.0, 1.0)))
}

/// Large-oracle limit of h_one: with infinitely many oracle samples the
/// count test becomes an exact test of the violation probability, and the
/// rejection probability tends to beta_eps at level eps_prime.
pub fn h_one_asymptotic(scenarios: u64, n: u64, eps_prime: Probability) -> Result<Probability> {
    beta_eps(scenarios, n, eps_prime)
}

/// Continuum-threshold variant of h_one: treats the acceptance threshold
/// eps_prime * oracle_samples as a real number instead of flooring it to an
/// integer count, evaluating the resulting mixture by adaptive quadrature.
/// Coincides with h_one whenever eps_prime * oracle_samples is an integer.
///
/// This is a diagnostic only; the engine's acceptance law floors the
/// threshold. Published reference values for configurations like
/// (n=11, N=2000, N_o=63000, eps'=0.0035) match this variant, not the
/// floored one, so both are exposed for comparison.
pub fn h_one_smoothed(dims: DesignDims, eps_prime: Probability) -> Result<Probability> {
    let d = dims.oracle_samples as f64;
    let z = eps_prime.value() * d;
    if z >= d {
        return Ok(Probability::ZERO);
    }
    let (alpha, beta) = beta_binom_shapes(dims);
    let ln_b = log_beta(alpha, beta)?;
    // integrand: P(Bin(N_o, t) <= z) extended to real z, times the
    // Beta(n, N - n + 1) density of the candidate's violation probability
    let accept_mass = |t: f64| -> Result<f64> {
        let mut ln_pdf = -ln_b;
        if alpha > 1.0 {
            ln_pdf += (alpha - 1.0) * t.ln();
        }
        if beta > 1.0 {
            ln_pdf += (beta - 1.0) * (-t).ln_1p();
        }
        let pdf = ln_pdf.exp();
        if pdf == 0.0 {
            return Ok(0.0);
        }
        let cdf = reg_inc_beta(d - z, z + 1.0, 1.0 - t)?;
        Ok(pdf * cdf.value())
    };
    let accepted = integrate_adaptive(&accept_mass, 0.0, 1.0, 1e-10)?;
    Ok(Probability::new_unchecked((1.0 - accepted).clamp(0.0, 1.0)))
}

/// Adaptive Simpson quadrature over [a, b]. The interval is pre-split into
/// 64 panels so narrow features (the beta densities here peak in a band of
/// width ~sqrt(n)/N) are always probed before refinement decides to stop.
fn integrate_adaptive(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    const PANELS: usize = 64;
    let mut total = 0.0;
    let width = (b - a) / PANELS as f64;
    for k in 0..PANELS {
        let lo = a + k as f64 * width;
        let hi = lo + width;
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo)?, f(mid)?, f(hi)?);
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_refine(f, lo, hi, flo, fmid, fhi, whole, tol / PANELS as f64, 40)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Closed-form upper bound on the probability that the loop exits with a
/// candidate whose violation probability exceeds eps, for fully supported
/// programs: I_{1-eps}(N + (1-eps')N_o - n + 1, n + eps' N_o). The threshold
/// enters with its real value here (no floor), exactly as the bound is
/// defined; only the oracle's count test floors it.
pub fn bar_beta(dims: DesignDims, levels: Levels) -> Result<Probability> {
    let no = dims.oracle_samples as f64;
    let kept = levels.eps_prime.complement().value() * no;
    let shape_a = (dims.scenarios - dims.n + 1) as f64 + kept;
    let shape_b = dims.n as f64 + levels.eps_prime.value() * no;
    reg_inc_beta(shape_a, shape_b, levels.eps.complement().value())
}

/// Bad-exit bound for fully supported programs; alias of [`bar_beta`] under
/// its operational name.
pub fn bad_exit_bound_fs(dims: DesignDims, levels: Levels) -> Result<Probability> {
    bar_beta(dims, levels)
}

/// Bad-exit bound for general (not necessarily fully supported) programs,
/// possibly vacuous.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeneralBadExitBound {
    pub value: Probability,
    /// True when the raw bound reached or exceeded 1 and was clamped.
    pub vacuous: bool,
}

/// Upper bound on the bad-exit probability for general scenario programs:
/// leading beta factor times the one-shot tail, divided by the per-iteration
/// exit probability. Clamped to 1 (with `vacuous` set) when uninformative;
/// undefined when the exit probability is numerically zero.
pub fn bad_exit_bound_general(dims: DesignDims, levels: Levels) -> Result<GeneralBadExitBound> {
    if levels.eps == Probability::ONE {
        return Ok(GeneralBadExitBound { value: Probability::ZERO, vacuous: false });
    }
    let no = dims.oracle_samples as f64;
    let lead = reg_inc_beta(
        levels.eps_prime.complement().value() * no,
        levels.eps_prime.value() * no + 1.0,
        levels.eps.complement().value(),
    )?;
    let one_shot = beta_eps(dims.scenarios, dims.n, levels.eps)?;
    let reject = h_one(dims, levels.eps_prime)?;
    if reject >= Probability::ONE {
        return Err(Error::undefined(
            "bad_exit_bound_general",
            "per-iteration exit probability is numerically zero",
        ));
    }
    let raw = lead.value() * one_shot.value() / (1.0 - reject.value());
    if raw >= 1.0 {
        Ok(GeneralBadExitBound { value: Probability::ONE, vacuous: true })
    } else {
        Ok(GeneralBadExitBound { value: Probability::new_unchecked(raw), vacuous: false })
    }
}

/// Exact conditional bad-exit probability for fully supported programs:
/// P(violation > eps | exit) = (h_eps - h_one) / (1 - h_one).
pub fn bad_exit_exact_fs(dims: DesignDims, levels: Levels) -> Result<Probability> {
    let reject = h_one(dims, levels.eps_prime)?;
    if reject >= Probability::ONE {
        return Err(Error::undefined(
            "bad_exit_exact_fs",
            "per-iteration exit probability is numerically zero",
        ));
    }
    let joint = h_eps(dims, levels)?;
    let value = (joint.value() - reject.value()) / (1.0 - reject.value());
    Ok(Probability::new_unchecked(value.clamp(0.0, 1.0)))
}

/// Runtime law of a repeat-until-accept loop with per-iteration rejection
/// probability r: expected iterations <= 1/(1 - r) and
/// P(done within cap) >= 1 - r^cap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RuntimeBounds {
    /// Upper bound on the expected number of iterations to exit.
    pub expected_iterations: f64,
    /// Lower bound on the probability of exiting within `cap` iterations.
    pub completion_probability: Probability,
    pub cap: u64,
}

fn runtime_from_rejection(op: &'static str, rejection: Probability, cap: u64) -> Result<RuntimeBounds> {
    if cap < 1 {
        return Err(Error::domain(op, "cap must be >= 1"));
    }
    let r = rejection.value();
    if r >= 1.0 {
        return Err(Error::undefined(op, "rejection probability is 1: runtime unbounded"));
    }
    Ok(RuntimeBounds {
        expected_iterations: 1.0 / (1.0 - r),
        completion_probability: Probability::new_unchecked((1.0 - r.powf(cap as f64)).clamp(0.0, 1.0)),
        cap,
    })
}

/// Runtime bounds for the loop with the deterministic (exact) violation
/// check: rejection probability beta_eps(scenarios, n, eps). Exact equality
/// for fully supported programs.
pub fn dvo_runtime_bounds(
    scenarios: u64,
    n: u64,
    eps: Probability,
    cap: u64,
) -> Result<RuntimeBounds> {
    let rejection = beta_eps(scenarios, n, eps)?;
    runtime_from_rejection("dvo_runtime_bounds", rejection, cap)
}

/// Runtime bounds for the loop with the randomized counting oracle:
/// rejection probability h_one(dims, eps_prime).
pub fn rvo_runtime_bounds(dims: DesignDims, eps_prime: Probability, cap: u64) -> Result<RuntimeBounds> {
    let rejection = h_one(dims, eps_prime)?;
    runtime_from_rejection("rvo_runtime_bounds", rejection, cap)
}
