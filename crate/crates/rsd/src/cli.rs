//! Command-line front end.
//!
//! Subcommands: `dimension` sizes a loop, `tradeoff` prints the
//! scenarios-versus-repetitions curve, `bounds` evaluates the probability
//! calculus at explicit sizes, `run` executes one design loop, and
//! `montecarlo` runs an experiment spec. Exit codes: 0 success, 1 usage
//! error, 2 domain/numeric/io error, 3 a run that hit its iteration cap.

use crate::bounds::{
    bad_exit_bound_general, bad_exit_exact_fs, bar_beta, beta_eps, h_eps, h_one, h_one_smoothed,
    oracle_threshold, rvo_runtime_bounds, DesignDims, Levels,
};
use crate::dimensioning::{
    dimension_rsd, dimension_rsd_pinned, iteration_cap, tradeoff_curve, DimensionReport,
    ScenarioConfig,
};
use crate::engine::{run, Algorithm, RunResult, RunStatus};
use crate::error::Result;
use crate::harness::{ExperimentSpec, ExperimentStats};
use crate::problems::{
    InputDesignInstance, ProblemId, ScenarioProblem, SyntheticFs1d, TransportNetworkInstance,
};
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "rsd",
    version,
    about = "Repetitive scenario design: dimension, bound, and run sampled-feasibility loops"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Size the loop: scenario count, oracle budget, and iteration cap.
    Dimension(DimensionArgs),
    /// Expected-repetitions bound as a function of the scenario count (CSV).
    Tradeoff(TradeoffArgs),
    /// Evaluate the feasibility calculus at explicit sizes.
    Bounds(BoundsArgs),
    /// Execute one design loop and print its trace.
    Run(RunArgs),
    /// Run a Monte Carlo experiment from a JSON spec file.
    Montecarlo(MonteCarloArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Write the output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DimensionArgs {
    /// Decision dimension.
    #[arg(long)]
    n: u64,
    /// Violation level to certify.
    #[arg(long)]
    eps: f64,
    /// Confidence target (bad-exit probability budget).
    #[arg(long)]
    beta: f64,
    /// Oracle level as a fraction of eps.
    #[arg(long, default_value_t = 0.7)]
    fraction: f64,
    /// Bound on expected repetitions the scenario count is chosen for.
    #[arg(long, default_value_t = 10.0)]
    target: f64,
    /// Pin the scenario count instead of selecting it from the target.
    #[arg(long = "N")]
    scenarios: Option<u64>,
    /// Seed stored in the emitted configuration.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TradeoffArgs {
    /// Decision dimension.
    #[arg(long)]
    n: u64,
    /// Oracle level.
    #[arg(long)]
    epsp: f64,
    /// Smallest scenario count on the curve.
    #[arg(long)]
    from: u64,
    /// Largest scenario count on the curve.
    #[arg(long)]
    to: u64,
    /// Grid size (log-spaced).
    #[arg(long, default_value_t = 40)]
    points: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Decision dimension.
    #[arg(long)]
    n: u64,
    /// Scenario count per iteration.
    #[arg(long = "N")]
    scenarios: u64,
    /// Oracle sample budget per check.
    #[arg(long = "No")]
    oracle_samples: u64,
    /// Violation level.
    #[arg(long)]
    eps: f64,
    /// Oracle acceptance level.
    #[arg(long)]
    epsp: f64,
    /// Optional confidence target: adds the iteration cap and the
    /// completion probability within it.
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Problem to run: synthetic, input-design, or transport.
    #[arg(long, value_parser = parse_problem)]
    problem: ProblemId,
    /// Instance JSON file; the built-in instance when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Feasibility check: rvo (randomized) or dvo (exact law).
    #[arg(long, default_value = "rvo", value_parser = parse_algorithm)]
    algorithm: Algorithm,
    /// Scenario count per iteration.
    #[arg(long = "N")]
    scenarios: u64,
    /// Oracle sample budget per check.
    #[arg(long = "No")]
    oracle_samples: u64,
    /// Violation level.
    #[arg(long)]
    eps: f64,
    /// Oracle acceptance level.
    #[arg(long)]
    epsp: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 256)]
    cap: u64,
    /// Confidence target recorded in the configuration.
    #[arg(long, default_value_t = 1e-6)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    /// Experiment spec JSON file.
    spec: PathBuf,
    /// Override the spec's configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec's trials CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the spec's worker count.
    #[arg(long)]
    parallel: Option<usize>,
    /// Print the aggregate statistics as JSON.
    #[arg(long)]
    json: bool,
}

fn parse_problem(s: &str) -> std::result::Result<ProblemId, String> {
    s.parse()
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse()
}

/// Parse and execute, mapping every outcome to a process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Dimension(args) => dimension_command(args),
        Command::Tradeoff(args) => tradeoff_command(args),
        Command::Bounds(args) => bounds_command(args),
        Command::Run(args) => run_command(args),
        Command::Montecarlo(args) => montecarlo_command(args),
    }
}

fn deliver(output: &OutputArgs, rendered: &str) -> Result<()> {
    match &output.out {
        None => print!("{rendered}"),
        Some(path) => {
            std::fs::write(path, rendered)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn dimension_command(args: DimensionArgs) -> Result<i32> {
    let mut report = match args.scenarios {
        None => dimension_rsd(args.n, args.eps, args.beta, args.fraction, args.target)?,
        Some(scenarios) => {
            dimension_rsd_pinned(args.n, args.eps, args.beta, args.fraction, scenarios)?
        }
    };
    report.config = report.config.with_seed(args.seed);
    let rendered = if args.output.json {
        let mut s = serde_json::to_string_pretty(&report)?;
        s.push('\n');
        s
    } else {
        render_dimension(&report)
    };
    deliver(&args.output, &rendered)?;
    Ok(0)
}

fn render_dimension(report: &DimensionReport) -> String {
    let config = &report.config;
    let dims = config.dims();
    let levels = config.levels();
    let general = &report.general_bad_exit_bound;
    let mut s = String::new();
    let _ = writeln!(s, "configuration");
    let _ = writeln!(s, "  n              = {}", dims.n());
    let _ = writeln!(s, "  scenarios (N)  = {}", dims.scenarios());
    let _ = writeln!(s, "  oracle (No)    = {}", dims.oracle_samples());
    let _ = writeln!(s, "  eps            = {}", levels.eps());
    let _ = writeln!(s, "  eps'           = {}", levels.eps_prime());
    let _ = writeln!(s, "  beta target    = {}", levels.beta_target());
    let _ = writeln!(s, "  iteration cap  = {}", config.iteration_cap());
    let _ = writeln!(s, "  seed           = {}", config.seed());
    let _ = writeln!(s, "bad-exit bounds");
    let _ = writeln!(
        s,
        "  fully supported = {} (within target: {})",
        report.fs_bad_exit_bound,
        if report.fs_bound_within_target { "yes" } else { "no" }
    );
    let _ = writeln!(
        s,
        "  general         = {}{}",
        general.value,
        if general.vacuous { " (vacuous)" } else { "" }
    );
    let _ = writeln!(s, "expected repetitions");
    let _ = writeln!(s, "  exact bound               = {}", report.expected_repetitions);
    let _ = writeln!(s, "  selection surrogate       = {}", report.expected_repetitions_asymptotic);
    s
}

fn tradeoff_command(args: TradeoffArgs) -> Result<i32> {
    let eps_prime = crate::types::Probability::new(args.epsp)?;
    let points = tradeoff_curve(args.n, eps_prime, (args.from, args.to), args.points)?;
    let rendered = if args.output.json {
        let mut s = serde_json::to_string_pretty(&points)?;
        s.push('\n');
        s
    } else {
        let mut s = String::from("N,bound\n");
        for p in &points {
            match p.expected_repetitions_bound {
                Some(b) => {
                    let _ = writeln!(s, "{},{}", p.scenarios, b);
                }
                None => {
                    let _ = writeln!(s, "{},inf", p.scenarios);
                }
            }
        }
        s
    };
    deliver(&args.output, &rendered)?;
    Ok(0)
}

fn bounds_command(args: BoundsArgs) -> Result<i32> {
    let dims = DesignDims::new(args.n, args.scenarios, args.oracle_samples)?;
    let levels = Levels::new(args.eps, args.epsp, args.beta.unwrap_or(0.5))?;
    let eps = levels.eps();
    let eps_prime = levels.eps_prime();

    let one_shot = beta_eps(dims.scenarios(), dims.n(), eps)?;
    let one_shot_prime = beta_eps(dims.scenarios(), dims.n(), eps_prime)?;
    let threshold = oracle_threshold(eps_prime, dims.oracle_samples());
    let reject = h_one(dims, eps_prime)?;
    let reject_smoothed = h_one_smoothed(dims, eps_prime)?;
    let joint = h_eps(dims, levels)?;
    let fs_bound = bar_beta(dims, levels)?;
    let general = bad_exit_bound_general(dims, levels)?;
    let exact_fs = bad_exit_exact_fs(dims, levels)?;
    let expected = 1.0 / (1.0 - reject.value());
    let expected_smoothed = 1.0 / (1.0 - reject_smoothed.value());
    let capped = match args.beta {
        None => None,
        Some(beta) => {
            let target = crate::types::Probability::new(beta)?;
            let cap = iteration_cap(reject, target)?;
            Some((cap, rvo_runtime_bounds(dims, eps_prime, cap)?))
        }
    };

    let rendered = if args.output.json {
        let mut doc = serde_json::json!({
            "dims": dims,
            "eps": eps.value(),
            "eps_prime": eps_prime.value(),
            "one_shot_tail_at_eps": one_shot.value(),
            "one_shot_tail_at_eps_prime": one_shot_prime.value(),
            "oracle_threshold": threshold,
            "h_one": reject.value(),
            "h_one_smoothed": reject_smoothed.value(),
            "h_eps": joint.value(),
            "bad_exit_fully_supported": fs_bound.value(),
            "bad_exit_general": general.value.value(),
            "bad_exit_general_vacuous": general.vacuous,
            "bad_exit_exact_fully_supported": exact_fs.value(),
            "expected_repetitions_bound": expected,
            "expected_repetitions_smoothed": expected_smoothed,
        });
        if let Some((cap, runtime)) = &capped {
            doc["iteration_cap"] = serde_json::json!(cap);
            doc["completion_probability_within_cap"] =
                serde_json::json!(runtime.completion_probability.value());
        }
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        s
    } else {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "inputs: n = {}, N = {}, No = {}, eps = {}, eps' = {}",
            dims.n(),
            dims.scenarios(),
            dims.oracle_samples(),
            eps,
            eps_prime
        );
        let _ = writeln!(s, "one-shot tails");
        let _ = writeln!(s, "  at eps             = {one_shot}");
        let _ = writeln!(s, "  at eps'            = {one_shot_prime} (large-oracle rejection limit)");
        let _ = writeln!(s, "oracle acceptance (count threshold floor(eps' No) = {threshold})");
        let _ = writeln!(s, "  h_one              = {reject} (per-iteration rejection probability)");
        let _ = writeln!(s, "  h_one smoothed     = {reject_smoothed} (continuum-threshold diagnostic)");
        let _ = writeln!(s, "  h_eps              = {joint}");
        let _ = writeln!(s, "bad exit");
        let _ = writeln!(s, "  fully supported    = {fs_bound}");
        let _ = writeln!(
            s,
            "  general            = {}{}",
            general.value,
            if general.vacuous { " (vacuous)" } else { "" }
        );
        let _ = writeln!(s, "  exact conditional  = {exact_fs} (fully supported)");
        let _ = writeln!(s, "runtime");
        let _ = writeln!(s, "  expected repetitions <= {expected}");
        let _ = writeln!(s, "  smoothed diagnostic  <= {expected_smoothed}");
        if let Some((cap, runtime)) = &capped {
            let _ = writeln!(
                s,
                "  iteration cap {} completes with probability >= {}",
                cap, runtime.completion_probability
            );
        }
        s
    };
    deliver(&args.output, &rendered)?;
    Ok(0)
}

fn run_command(args: RunArgs) -> Result<i32> {
    match args.problem {
        ProblemId::Synthetic => run_one(&SyntheticFs1d::default(), &args),
        ProblemId::InputDesign => {
            let instance = match &args.instance {
                None => InputDesignInstance::canonical(),
                Some(p) => {
                    let instance: InputDesignInstance =
                        serde_json::from_str(&std::fs::read_to_string(p)?)?;
                    instance.validate()?;
                    instance
                }
            };
            run_one(&instance, &args)
        }
        ProblemId::Transport => {
            let instance = match &args.instance {
                None => TransportNetworkInstance::canonical(),
                Some(p) => {
                    let instance: TransportNetworkInstance =
                        serde_json::from_str(&std::fs::read_to_string(p)?)?;
                    instance.validate()?;
                    instance
                }
            };
            run_one(&instance, &args)
        }
    }
}

fn run_one<P: ScenarioProblem>(problem: &P, args: &RunArgs) -> Result<i32> {
    let dims = DesignDims::new(
        problem.decision_len() as u64,
        args.scenarios,
        args.oracle_samples,
    )?;
    let levels = Levels::new(args.eps, args.epsp, args.beta)?;
    let config = ScenarioConfig::new(dims, levels, args.cap, args.seed)?;
    let result = run(problem, &config, args.algorithm)?;
    let rendered = if args.output.json {
        let mut s = serde_json::to_string_pretty(&result)?;
        s.push('\n');
        s
    } else {
        render_run(&result)
    };
    deliver(&args.output, &rendered)?;
    Ok(match result.status {
        RunStatus::Returned => 0,
        RunStatus::CapExceeded => 3,
    })
}

fn render_run(result: &RunResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status         = {}", result.status);
    let _ = writeln!(s, "exit iteration = {}", result.exit_iteration);
    let _ = writeln!(s, "objective      = {}", result.objective);
    let _ = writeln!(s, "theta          = {:?}", result.theta_star);
    let _ = writeln!(s, "iter  objective        accepted  violations  samples  level      solve_ms  oracle_ms");
    for (k, record) in result.per_iteration.iter().enumerate() {
        let o = &record.oracle;
        let _ = writeln!(
            s,
            "{:<5} {:<16.10} {:<9} {:<11} {:<8} {:<10.6} {:<9} {}",
            k + 1,
            record.objective,
            o.flag,
            o.violation_count,
            o.samples_used,
            o.empirical_violation.value(),
            record.solve_ms,
            record.oracle_ms
        );
    }
    s
}

fn montecarlo_command(args: MonteCarloArgs) -> Result<i32> {
    let mut spec = ExperimentSpec::from_json_file(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.config = spec.config.with_seed(seed);
    }
    if let Some(out) = args.out {
        spec.out = Some(out);
    }
    if let Some(parallel) = args.parallel {
        spec.parallel = parallel;
    }
    let stats = dispatch_monte_carlo(&spec)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        print!("{}", render_stats(&spec, &stats));
    }
    Ok(0)
}

fn dispatch_monte_carlo(spec: &ExperimentSpec) -> Result<ExperimentStats> {
    crate::harness::monte_carlo(spec)
}

fn render_stats(spec: &ExperimentSpec, stats: &ExperimentStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "problem             = {}", spec.problem);
    let _ = writeln!(s, "algorithm           = {}", spec.algorithm);
    let _ = writeln!(s, "trials              = {}", stats.trials);
    let _ = writeln!(s, "cap exceeded        = {}", stats.cap_exceeded);
    let _ = writeln!(
        s,
        "exit iterations     : mean {}, max {}",
        stats.mean_exit_iteration, stats.max_exit_iteration
    );
    let histogram: Vec<String> = stats
        .exit_histogram
        .iter()
        .map(|(iter, count)| format!("{iter}:{count}"))
        .collect();
    let _ = writeln!(s, "exit histogram      : {}", histogram.join(" "));
    let _ = writeln!(
        s,
        "empirical violation : mean {}, max {}",
        stats.mean_empirical_violation, stats.max_empirical_violation
    );
    let q = &stats.objective_quantiles;
    let _ = writeln!(
        s,
        "objective quantiles : min {} q25 {} median {} q75 {} max {}",
        q[0], q[1], q[2], q[3], q[4]
    );
    if let Some(path) = &spec.out {
        let _ = writeln!(s, "trials csv          : {}", path.display());
    }
    s
}
