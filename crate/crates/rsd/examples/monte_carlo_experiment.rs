//! Run a batch of independent design loops and aggregate their traces.

use rsd::dimensioning::ScenarioConfig;
use rsd::engine::Algorithm;
use rsd::harness::{monte_carlo, ExperimentSpec};
use rsd::problems::ProblemId;
use rsd::{DesignDims, Levels};

fn main() -> Result<(), rsd::Error> {
    let out = std::env::temp_dir().join("rsd_mc_demo.csv");
    let spec = ExperimentSpec {
        problem: ProblemId::Synthetic,
        instance: None,
        config: ScenarioConfig::new(
            DesignDims::new(1, 10, 400)?,
            Levels::new(0.1, 0.07, 1e-6)?,
            64,
            7,
        )?,
        trials: 200,
        out: Some(out.clone()),
        parallel: 4,
        algorithm: Algorithm::Rvo,
    };
    spec.validate()?;

    let stats = monte_carlo(&spec)?;
    println!("{} trials, {} hit the cap", stats.trials, stats.cap_exceeded);
    println!(
        "exit iterations: mean {:.3}, max {}",
        stats.mean_exit_iteration, stats.max_exit_iteration
    );
    print!("exit histogram:");
    for (iteration, count) in &stats.exit_histogram {
        print!(" {iteration}:{count}");
    }
    println!();
    println!(
        "empirical violation: mean {:.5}, max {:.5}",
        stats.mean_empirical_violation, stats.max_empirical_violation
    );
    let q = stats.objective_quantiles;
    println!("objective quartiles: {:.4} / {:.4} / {:.4} / {:.4} / {:.4}", q[0], q[1], q[2], q[3], q[4]);
    println!("per-trial rows: {}", out.display());
    Ok(())
}
