//! Check the probability calculus against a problem whose violation law is
//! known exactly.
//!
//! The synthetic program minimizes theta subject to theta >= q for uniform
//! samples, so the solution is the sample maximum, the violation probability
//! is 1 - theta, and every prediction of the calculus can be measured by
//! plain counting.

use rsd::bounds::beta_eps;
use rsd::dimensioning::ScenarioConfig;
use rsd::engine::{run, Algorithm};
use rsd::problems::{ScenarioProblem, SyntheticFs1d};
use rsd::rng::{sample_stream, trial_seed, StreamRole};
use rsd::{DesignDims, Levels, Probability};

const TRIALS: u64 = 10_000;

fn main() -> Result<(), rsd::Error> {
    let problem = SyntheticFs1d;
    let eps = Probability::new(0.1)?;

    // one-shot law: P(violation <= eps) after a single solve on 10 samples
    let mut hits = 0u64;
    for trial in 0..TRIALS {
        let mut rng = sample_stream(trial_seed(4242, trial), 1, StreamRole::Design, 0);
        let samples: Vec<f64> = (0..10).map(|_| problem.sample(&mut rng)).collect();
        let theta = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let violation = problem.analytic_violation(&[theta]).expect("law is closed form");
        if violation.value() <= eps.value() {
            hits += 1;
        }
    }
    let predicted = 1.0 - beta_eps(10, 1, eps)?.value();
    let observed = hits as f64 / TRIALS as f64;
    let se = (predicted * (1.0 - predicted) / TRIALS as f64).sqrt();
    println!("one-shot acceptance law over {TRIALS} trials");
    println!("  predicted {predicted:.6}");
    println!("  observed  {observed:.6}  ({:+.2} standard errors)", (observed - predicted) / se);

    // repeat-until-accept with the exact check: exits are geometric with
    // rejection probability beta_eps, so the mean exit is its reciprocal of
    // the complement
    let config = ScenarioConfig::new(
        DesignDims::new(1, 10, 1)?,
        Levels::new(0.1, 0.07, 1e-6)?,
        64,
        0,
    )?;
    let mut total_exits = 0u64;
    for trial in 0..TRIALS {
        let result = run(&problem, &config.with_seed(trial_seed(17, trial)), Algorithm::Dvo)?;
        total_exits += result.exit_iteration;
    }
    let rejection = beta_eps(10, 1, eps)?.value();
    println!();
    println!("exact-check loop over {TRIALS} trials");
    println!("  mean exit iteration {:.4}", total_exits as f64 / TRIALS as f64);
    println!("  geometric prediction {:.4}", 1.0 / (1.0 - rejection));
    Ok(())
}
