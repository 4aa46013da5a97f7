//! Reads a sparse symmetric positive definite matrix from a Matrix Market
//! file, builds the quadratic whose solution is the all-ones vector
//! (b = A e), estimates bracketing spectral bounds by power iteration, and
//! compares plain BB1 with three adaptively capped variants.
//!
//! ```bash
//! cargo run --example matrix_market_solve [path/to/matrix.mtx]
//! ```

use std::path::PathBuf;

use bbstab::core::{norm, Problem};
use bbstab::harness::{run_experiment, summary_csv, ExperimentSpec, ProblemSelector, SolverSpec, StartSpec};
use bbstab::quadratic_io::{build_quadratic, estimate_spectral_bounds, parse_matrix_market_file};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/lap1d_n50.mtx"));

    let matrix = parse_matrix_market_file(&path).expect("readable Matrix Market file");
    println!(
        "{}: n = {}, stored entries = {}",
        path.display(),
        matrix.n(),
        matrix.nnz()
    );
    match estimate_spectral_bounds(&matrix, 50_000, 1e-10) {
        Ok(bounds) => println!(
            "estimated spectrum within [{:.4}, {:.4}], kappa <= {:.1}",
            bounds.lambda_lo(),
            bounds.lambda_hi(),
            bounds.kappa()
        ),
        Err(e) => println!("spectral estimate unavailable: {e}"),
    }
    let quadratic = build_quadratic(matrix);
    let residual_at_solution = norm(&quadratic.gradient(&vec![1.0; quadratic.dimension()]));
    println!("|g(e)| = {residual_at_solution:.2e} (zero by construction of b = Ae)\n");

    let mut spec = ExperimentSpec::new(ProblemSelector::MatrixFile(path), StartSpec::Zero);
    for solver in ["bb1", "bb1 delta=auto:0.2", "bb1 delta=auto:0.25", "bb1 delta=auto:0.3"] {
        spec.solvers.push(SolverSpec::parse(solver).unwrap());
    }
    let reports = run_experiment(&spec).expect("experiment failed");
    print!("{}", summary_csv(&reports));
}
