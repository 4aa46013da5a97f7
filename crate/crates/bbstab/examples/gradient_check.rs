//! Oracle sweep: analytic gradients against central differences, and the
//! closed-form BB stepsizes against a search-based least-squares solver.
//! This is the same machinery behind `bbstab check`.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use bbstab::core::Problem;
use bbstab::oracles::{fd_gradient_check, stepsize_oracle};
use bbstab::problems::{
    diagonal_quadratic, Counterexample, ExtendedRosenbrock, Raydan, SeparableCounterexample,
};
use bbstab::stepsize::{bb1, bb2, StepPair};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() {
    let mut rng = StdRng::seed_from_u64(7);

    let ce = Counterexample;
    let sep = SeparableCounterexample::new(6).unwrap();
    let ray = Raydan::new(10).unwrap();
    let ros = ExtendedRosenbrock::new(8).unwrap();
    let quad = diagonal_quadratic(&[1.0, 2.5, 40.0]).unwrap();
    let problems: Vec<(&str, &dyn Problem)> = vec![
        ("counterexample", &ce),
        ("separable counterexample", &sep),
        ("raydan", &ray),
        ("extended rosenbrock", &ros),
        ("diagonal quadratic", &quad),
    ];

    println!("central-difference gradient check (h = 1e-6, 30 random points each):");
    for (name, problem) in problems {
        let mut worst = 0.0_f64;
        for _ in 0..30 {
            let x: Vec<f64> = (0..problem.dimension())
                .map(|_| rng.gen_range(-3.0..3.0))
                .collect();
            worst = worst.max(fd_gradient_check(problem, &x, 1e-6).unwrap());
        }
        println!("  {name:<26} max relative deviation {worst:.3e}");
    }

    println!("\nstepsize oracle vs closed forms (500 random positive-curvature pairs):");
    let mut worst1 = 0.0_f64;
    let mut worst2 = 0.0_f64;
    let mut used = 0;
    while used < 500 {
        let n = rng.gen_range(1..8);
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let pair = StepPair::new(s, y).unwrap();
        let (Some(a1), Some(a2)) = (bb1(&pair), bb2(&pair)) else {
            continue;
        };
        let (o1, o2) = stepsize_oracle(&pair);
        worst1 = worst1.max((o1 - a1).abs() / a1);
        worst2 = worst2.max((o2 - a2).abs() / a2);
        used += 1;
    }
    println!("  bb1 worst relative deviation {worst1:.3e}");
    println!("  bb2 worst relative deviation {worst2:.3e}");
}
