//! Robust input design for a sampled-uncertainty linear system, plus the
//! effect of the input-energy weight.

use rsd::dimensioning::ScenarioConfig;
use rsd::engine::{run, Algorithm};
use rsd::problems::InputDesignInstance;
use rsd::{DesignDims, Levels};

fn run_once(instance: &InputDesignInstance, seed: u64) -> Result<(f64, Vec<f64>), rsd::Error> {
    let config = ScenarioConfig::new(
        DesignDims::new(instance.horizon as u64 + 1, 2000, 63_000)?,
        Levels::new(0.005, 0.0035, 1e-12)?,
        256,
        seed,
    )?;
    let result = run(instance, &config, Algorithm::Rvo)?;
    println!(
        "  weight {:>7}: exit at iteration {}, certified level gamma = {:.6}",
        instance.tradeoff, result.exit_iteration, result.objective
    );
    Ok((result.objective, result.theta_star))
}

fn main() -> Result<(), rsd::Error> {
    let instance = InputDesignInstance::canonical();
    println!("steering a {}-state system over {} steps", instance.state_dim(), instance.horizon);

    let (gamma, theta) = run_once(&instance, 99)?;
    let inputs = &theta[..instance.horizon as usize];
    println!("inputs: {:?}", inputs.iter().map(|u| (u * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!("worst sampled miss-plus-energy level: {gamma:.6}");

    // a lighter energy weight can only lower the achievable level
    let mut light = instance.clone();
    light.tradeoff = 5e-4;
    println!();
    println!("energy weight sweep:");
    let (heavy_gamma, _) = run_once(&instance, 7)?;
    let (light_gamma, _) = run_once(&light, 7)?;
    println!(
        "  lighter weight changed gamma by {:+.6} (never an increase)",
        light_gamma - heavy_gamma
    );
    Ok(())
}
