use rsd::problems::{ScenarioProblem, TransportNetworkInstance};
use rsd::rng::{sample_stream, trial_seed, StreamRole};
use rsd::solver::{lp_solve, SolverOptions};

#[test]
#[ignore]
fn trace_single_trial() {
    let trial: u64 = std::env::var("RSD_TRIAL").unwrap().parse().unwrap();
    let instance = TransportNetworkInstance::canonical();
    let seed = trial_seed(311, trial);
    let samples: Vec<[f64; 3]> = (0..1340)
        .map(|i| {
            let mut rng = sample_stream(seed, 1, StreamRole::Design, i);
            instance.sample(&mut rng)
        })
        .collect();
    let lp = instance.build_lp(&samples).unwrap();
    let out = lp_solve(&lp, &SolverOptions::default());
    println!("trial {trial}: {out:?}");
}
