//! Evaluate the acceptance calculus at explicit sizes.
//!
//! The per-iteration rejection probability h_one depends on the oracle
//! budget No through a beta-binomial tail; as No grows it approaches the
//! one-shot tail at the oracle level. The bad-exit bounds combine the same
//! machinery with the violation level.

use rsd::bounds::{bad_exit_bound_general, bar_beta, beta_eps, h_one, oracle_threshold};
use rsd::{DesignDims, Levels, Probability};

fn main() -> Result<(), rsd::Error> {
    let eps_prime = Probability::new(0.0035)?;
    let limit = beta_eps(2000, 11, eps_prime)?;
    println!("one-shot tail at the oracle level = {:.10}", limit.value());
    println!();
    println!("{:>9}  {:>10}  {:>14}  {:>14}", "No", "threshold", "h_one", "|h_one-limit|");
    for oracle_samples in [10_000, 100_000, 1_000_000] {
        let dims = DesignDims::new(11, 2000, oracle_samples)?;
        let h1 = h_one(dims, eps_prime)?;
        println!(
            "{:>9}  {:>10}  {:>14.10}  {:>14.3e}",
            oracle_samples,
            oracle_threshold(eps_prime, oracle_samples),
            h1.value(),
            (h1.value() - limit.value()).abs()
        );
    }

    // the worked 11-dimensional configuration
    let dims = DesignDims::new(11, 2000, 63_000)?;
    let levels = Levels::new(0.005, 0.0035, 1e-12)?;
    let fs = bar_beta(dims, levels)?;
    let general = bad_exit_bound_general(dims, levels)?;
    println!();
    println!("at N = 2000, No = 63000, eps = 0.005, eps' = 0.0035:");
    println!("  bad exit (fully supported) <= {:.6e}", fs.value());
    println!(
        "  bad exit (general)         <= {:.6e}{}",
        general.value.value(),
        if general.vacuous { " (vacuous)" } else { "" }
    );
    Ok(())
}
