//! Fits a geometric envelope gamma * c^k to the error sequence of a capped
//! run on a known-solution quadratic, demonstrating the R-linear decay of
//! the method once the cap stops binding.
//!
//! ```bash
//! cargo run --example rlinear_envelope
//! ```

use bbstab::core::{norm, DeltaPolicy, SolverConfig, StepsizeRule};
use bbstab::oracles::{fit_rlinear_envelope, RecordingProblem};
use bbstab::problems::diagonal_quadratic;
use bbstab::solver::run;

fn main() {
    let eigenvalues: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let problem = diagonal_quadratic(&eigenvalues).unwrap();
    let recorder = RecordingProblem::new(&problem);
    let config = SolverConfig::new(StepsizeRule::BB2, DeltaPolicy::Adaptive(0.25));
    let result = run(&recorder, &vec![-5.0; 10], &config).unwrap();
    println!(
        "run: {:?} in {} iterations, last capped step at {:?}",
        result.status, result.iterations, result.last_stab_iteration
    );

    let errors: Vec<f64> = recorder
        .gradient_points()
        .iter()
        .map(|x| norm(&x.iter().map(|&v| v - 1.0).collect::<Vec<_>>()))
        .collect();

    let full = fit_rlinear_envelope(&errors).unwrap();
    println!(
        "full sequence:  c = {:.4}, gamma = {:.4e}, residual = {:.3} decades",
        full.c, full.gamma, full.residual
    );

    // The rate statement is asymptotic; fitting after the last capped step
    // isolates the plain-BB tail.
    let tail_start = result
        .last_stab_iteration
        .map(|k| k + 1)
        .unwrap_or(1)
        .min(errors.len().saturating_sub(10));
    let tail = fit_rlinear_envelope(&errors[tail_start..]).unwrap();
    println!(
        "tail from k={tail_start}: c = {:.4}, gamma = {:.4e}, residual = {:.3} decades{}",
        tail.c,
        tail.gamma,
        tail.residual,
        if tail.is_rlinear() { "  (R-linear)" } else { "" }
    );

    println!("\n  k   |x_k - x*|     envelope gamma * c^k");
    for (k, &err) in errors[tail_start..].iter().enumerate() {
        if k % 3 == 0 {
            println!(
                "  {:<3} {err:>12.5e}  {:>12.5e}",
                tail_start + k,
                tail.gamma * tail.c.powi(k as i32)
            );
        }
    }
}
