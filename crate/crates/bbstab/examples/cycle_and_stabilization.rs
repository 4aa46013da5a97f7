//! The motivating failure case: a strongly convex univariate function on
//! which the plain BB method cycles among four points forever, and the same
//! run with a step cap, which converges.
//!
//! ```bash
//! cargo run --example cycle_and_stabilization
//! ```

use bbstab::core::{norm, DeltaPolicy, Problem, SolverConfig, StepsizeRule};
use bbstab::oracles::{detect_cycle, RecordingProblem};
use bbstab::problems::{Counterexample, CounterexampleConstants};
use bbstab::solver::run_from_pair;

fn main() {
    let c = CounterexampleConstants::new();
    println!("cycle abscissas: -b = {:+.12}, -a = {:+.12}", -c.b, -c.a);

    // Plain BB from the cycle start: the iterates revisit -b, -a, b, a.
    let recorder = RecordingProblem::new(&Counterexample);
    let config = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Infinite)
        .with_max_iterations(200);
    let plain = run_from_pair(&recorder, &[-c.b], &[-c.a], &config).unwrap();
    println!("\nplain BB: {:?} after {} iterations", plain.status, plain.iterations);

    let points = recorder.gradient_points();
    for (k, x) in points.iter().enumerate().take(8) {
        println!("  x_{k} = {:+.12}", x[0]);
    }
    let cycle = detect_cycle(&points, 8, 1e-8).unwrap();
    match cycle.period {
        Some(p) => println!(
            "  detected period {p} (max deviation {:.2e} over iterations {}..{})",
            cycle.max_deviation, cycle.window.0, cycle.window.1
        ),
        None => println!("  no cycle detected"),
    }

    // Same start with the step length capped at 1.
    let g0 = Counterexample.gradient(&[-c.b]);
    let config = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Fixed(1.0))
        .with_max_iterations(500)
        .with_rel_tol(1e-10 / norm(&g0));
    let stab = run_from_pair(&Counterexample, &[-c.b], &[-c.a], &config).unwrap();
    println!(
        "\ncapped at delta = 1: {:?} after {} iterations, final x = {:+.3e}",
        stab.status, stab.iterations, stab.final_x[0]
    );
    println!("  capped steps taken: {}", stab.stab_step_count);
    for record in stab.trace.iter().take(6) {
        println!(
            "  k={:<2} |g|={:>12.6} alpha={:>10.6} branch={}",
            record.k, record.g_norm, record.alpha, record.branch
        );
    }
}
