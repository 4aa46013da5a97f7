//! Region diagnostics on a known-spectrum quadratic: every iterate is
//! classified by its gradient norm relative to the cap, and while the run
//! stays in the outer region the gradient norm contracts by the recorded
//! factor q_k.
//!
//! ```bash
//! cargo run --example quadratic_regions
//! ```

use bbstab::core::{norm, DeltaPolicy, Problem, SolverConfig, StepsizeRule};
use bbstab::problems::diagonal_quadratic;
use bbstab::solver::run;

fn main() {
    let eigenvalues: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let problem = diagonal_quadratic(&eigenvalues).unwrap();
    let bounds = problem.spectral_bounds().unwrap();

    let x0 = vec![-50.0; 10];
    let x_star = problem.minimizer().unwrap();
    let dist = norm(&x0.iter().zip(&x_star).map(|(a, b)| a - b).collect::<Vec<_>>());
    let delta = 1e-2 * dist;
    println!(
        "spectrum [{}, {}], kappa = {}, |x0 - x*| = {dist:.2}, delta = {delta:.3}",
        bounds.lambda_lo(),
        bounds.lambda_hi(),
        bounds.kappa()
    );

    let config = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Fixed(delta))
        .with_rel_tol(1e-10);
    let result = run(&problem, &x0, &config).unwrap();
    println!("status {:?} in {} iterations\n", result.status, result.iterations);

    println!("  k    |g_k|        region        branch         q_k      contraction |g_k+1|/|g_k|");
    let steps: Vec<_> = result.trace.iter().filter(|t| t.k >= 1).collect();
    for (idx, rec) in steps.iter().enumerate() {
        // Print a sparse view: the first few, around absorption, the tail.
        let interesting = rec.k <= 3
            || (idx + 1 < steps.len()
                && steps[idx + 1].region.map(|r| r.is_omega3()) != rec.region.map(|r| r.is_omega3()))
            || idx + 3 >= steps.len();
        if !interesting {
            continue;
        }
        let next_g = steps
            .get(idx + 1)
            .map(|r| r.g_norm)
            .unwrap_or(result.final_g_norm);
        println!(
            "  {:<4} {:<12.5e} {:<13} {:<14} {:<8} {:.6}",
            rec.k,
            rec.g_norm,
            rec.region.map(|r| r.to_string()).unwrap_or_default(),
            rec.branch.to_string(),
            rec.q_k.map(|q| format!("{q:.5}")).unwrap_or_default(),
            next_g / rec.g_norm
        );
    }
    println!(
        "\ncapped steps: {}, last at iteration {:?}, first plain BB step at {:?}",
        result.stab_step_count, result.last_stab_iteration, result.first_bb_iteration
    );
}
