use rsd::problems::{ScenarioProblem, TransportNetworkInstance};
use rsd::rng::{sample_stream, trial_seed, StreamRole};
use rsd::solver::{lp_solve, SolveStatus, SolverOptions};
use std::io::Write;

#[test]
#[ignore]
fn find_infeasible_transport_trial() {
    let instance = TransportNetworkInstance::canonical();
    for trial in 0..20u64 {
        let seed = trial_seed(311, trial);
        let samples: Vec<[f64; 3]> = (0..1340)
            .map(|i| {
                let mut rng = sample_stream(seed, 1, StreamRole::Design, i);
                instance.sample(&mut rng)
            })
            .collect();
        let lp = instance.build_lp(&samples).unwrap();
        let solved = lp_solve(&lp, &SolverOptions::default());
        let bad = match &solved {
            Ok(out) => {
                println!(
                    "trial {trial:2} seed {seed:20} status {:?} objective {:?}",
                    out.status, out.objective
                );
                out.status != SolveStatus::Optimal
            }
            Err(e) => {
                println!("trial {trial:2} seed {seed:20} ERROR {e}");
                true
            }
        };
        if bad {
            // dump the sample set for independent checking
            let path = format!("/tmp/transport_trial_{trial}.csv");
            let mut f = std::fs::File::create(&path).unwrap();
            for q in &samples {
                writeln!(f, "{},{},{}", q[0], q[1], q[2]).unwrap();
            }
            println!("dumped samples to {path}");
        }
    }
}
