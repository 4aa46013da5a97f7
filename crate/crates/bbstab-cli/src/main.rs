//! Thin command-line front-end over `bbstab::harness`: run a single solve,
//! a benchmark spec, aggregate summaries into performance profiles, or run
//! the verification suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bbstab::harness::{
    self, parse_delta, summary_csv, ExperimentSpec, ProblemSelector, SolverSpec, StartSpec,
};
use bbstab::core::SolverConfig;
use bbstab::core::StepsizeRule;

#[derive(Parser)]
#[command(name = "bbstab", version, about = "Barzilai-Borwein solvers with step-length stabilization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one problem with one solver configuration.
    Solve(SolveArgs),
    /// Run every solver of an experiment spec file and write traces plus a
    /// summary table.
    Bench {
        /// Flat key-value spec file (keys: problem, x0, x1, out, seed,
        /// maxit, tol, solver).
        spec: PathBuf,
        /// Overrides the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate previously written summary tables into performance
    /// profiles.
    Profile {
        /// Summary CSV files produced by `solve` or `bench`.
        summaries: Vec<PathBuf>,
        /// Where to write the profile CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle-backed verification suite.
    Check {
        /// Filter: all, gradients, stepsize, cycle, bounds, contraction,
        /// envelope.
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1234)]
        seed: u64,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Problem selector: counterexample[:n=K], raydan:n=K, rosenbrock:n=K,
    /// diag:a,b,c, diag:lo..hi, matrix:<path>.
    #[arg(long)]
    problem: Option<String>,
    /// Matrix Market file; shorthand for --problem matrix:<path>.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Stepsize rule.
    #[arg(long, default_value = "bb1")]
    rule: String,
    /// Step cap: inf, a radius, or auto:<c>.
    #[arg(long, default_value = "inf")]
    delta: String,
    #[arg(long, default_value_t = 100_000)]
    maxit: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Start point: zero, const:<v>, vec:a,b,c, file:<path>.
    #[arg(long, default_value = "zero")]
    x0: String,
    /// Optional explicit second start point, same grammar as --x0.
    #[arg(long)]
    x1: Option<String>,
    /// Output directory for trace and summary CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized diagnostics.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Bench { spec, out } => {
            let mut spec = ExperimentSpec::from_file(&spec)?;
            if out.is_some() {
                spec.out_dir = out;
            }
            let reports = harness::run_experiment(&spec)?;
            print_reports(&reports, spec.out_dir.as_deref());
            Ok(ExitCode::SUCCESS)
        }
        Command::Profile { summaries, out } => {
            if summaries.is_empty() {
                return Err("profile needs at least one summary CSV".into());
            }
            let results = harness::profile_input_from_summaries(&summaries)?;
            let curves = harness::performance_profile(&results, &harness::default_tau_grid())?;
            let csv = harness::profile_csv(&curves);
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { suite, seed } => {
            let report = harness::check(&suite, seed);
            print!("{report}");
            if report.entries.is_empty() {
                eprintln!("no checks matched `{suite}`");
                return Ok(ExitCode::FAILURE);
            }
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let selector: ProblemSelector = match (&args.problem, &args.matrix) {
        (Some(_), Some(_)) => return Err("pass either --problem or --matrix, not both".into()),
        (Some(p), None) => p.parse()?,
        (None, Some(m)) => ProblemSelector::MatrixFile(m.clone()),
        (None, None) => return Err("missing --problem or --matrix".into()),
    };
    let rule = match args.rule.as_str() {
        "bb1" => StepsizeRule::BB1,
        "bb2" => StepsizeRule::BB2,
        other => return Err(format!("unknown rule `{other}` (want bb1 or bb2)").into()),
    };
    let delta = parse_delta(&args.delta).ok_or("bad --delta (want inf, a radius, or auto:<c>)")?;
    let config = SolverConfig::new(rule, delta);

    let mut spec = ExperimentSpec::new(selector, args.x0.parse::<StartSpec>()?);
    spec.x1 = match args.x1 {
        Some(s) => Some(s.parse::<StartSpec>()?),
        None => None,
    };
    spec.solvers.push(SolverSpec {
        label: format!("{}_{}", args.rule, args.delta.replace(':', "")),
        config,
    });
    spec.out_dir = args.out;
    spec.seed = args.seed;
    spec.max_iterations = args.maxit;
    spec.rel_tol = args.tol;

    let reports = harness::run_experiment(&spec)?;
    print_reports(&reports, spec.out_dir.as_deref());
    Ok(ExitCode::SUCCESS)
}

fn print_reports(reports: &[harness::RunReport], out_dir: Option<&std::path::Path>) {
    print!("{}", summary_csv(reports));
    for r in reports {
        if let Some(cycle) = &r.cycle {
            if let Some(p) = cycle.period {
                println!(
                    "# {}: non-converged run cycles with period {p} (max deviation {:.2e})",
                    r.label, cycle.max_deviation
                );
            }
        }
        if let Some(last) = r.result.last_stab_iteration {
            println!(
                "# {}: {} capped steps, last at iteration {last}, first BB step at {:?}",
                r.label, r.result.stab_step_count, r.result.first_bb_iteration
            );
        }
    }
    if let Some(dir) = out_dir {
        println!("# traces and summary written to {}", dir.display());
    }
}
