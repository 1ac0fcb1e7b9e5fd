//! Size a repetitive design loop end to end: pick the scenario count from an
//! expected-repetitions target, size the oracle, and cap the iterations.
//!
//! Run with `cargo run --example dimension_pipeline`.

use rsd::dimensioning::{dimension_rsd, dimension_rsd_pinned};

fn main() -> Result<(), rsd::Error> {
    // certify violation <= 0.5% with confidence 1 - 1e-12 for an
    // 11-dimensional decision, checking at 70% of the violation level
    let report = dimension_rsd(11, 0.005, 1e-12, 0.7, 10.0)?;
    let dims = report.config.dims();
    println!("selected sizes for n = {}", dims.n());
    println!("  scenarios per iteration  N  = {}", dims.scenarios());
    println!("  oracle samples per check No = {}", dims.oracle_samples());
    println!("  iteration cap               = {}", report.config.iteration_cap());
    println!("  expected repetitions bound  = {:.4}", report.expected_repetitions);
    println!(
        "  bad-exit bound (fully supported) = {:.3e}, within target: {}",
        report.fs_bad_exit_bound.value(),
        report.fs_bound_within_target
    );
    println!(
        "  bad-exit bound (general)         = {:.3e}",
        report.general_bad_exit_bound.value.value()
    );

    // the scenario count can also be pinned, sizing only the oracle and cap
    let pinned = dimension_rsd_pinned(8, 0.005, 1e-12, 0.7, 1340)?;
    let dims = pinned.config.dims();
    println!();
    println!("pinned N = 1340 for n = 8");
    println!("  oracle samples per check No = {}", dims.oracle_samples());
    println!("  iteration cap               = {}", pinned.config.iteration_cap());
    println!("  expected repetitions bound  = {:.4}", pinned.expected_repetitions);
    Ok(())
}
