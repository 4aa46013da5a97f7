//! A small benchmark over the bundled matrices plus two analytic problems,
//! aggregated into performance profiles: for each solver, the fraction of
//! problems solved within a factor tau of the per-problem best iteration
//! count.
//!
//! ```bash
//! cargo run --example performance_profile
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use bbstab::harness::{
    performance_profile, run_experiment, ExperimentSpec, ProblemSelector, SolverSpec, StartSpec,
};

fn main() {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let problems = vec![
        (ProblemSelector::MatrixFile(data.join("lap1d_n50.mtx")), StartSpec::Zero),
        (ProblemSelector::MatrixFile(data.join("bands_n40.mtx")), StartSpec::Zero),
        (ProblemSelector::MatrixFile(data.join("chain_n25.mtx")), StartSpec::Zero),
        (ProblemSelector::MatrixFile(data.join("mass_n30.mtx")), StartSpec::Zero),
        (ProblemSelector::Diagonal { eigenvalues: (1..=40).map(f64::from).collect() }, StartSpec::Const(-3.0)),
        (ProblemSelector::Raydan { n: 200 }, StartSpec::Const(-1.0)),
    ];
    let solvers = ["bb1", "bb1 delta=auto:0.25", "bb2", "bb2 delta=auto:0.25"];

    // solver -> problem -> (solved, iterations)
    let mut results: BTreeMap<String, BTreeMap<String, (bool, usize)>> = BTreeMap::new();
    for (selector, x0) in problems {
        let mut spec = ExperimentSpec::new(selector, x0);
        for s in solvers {
            spec.solvers.push(SolverSpec::parse(s).unwrap());
        }
        for report in run_experiment(&spec).expect("run failed") {
            results.entry(report.label.clone()).or_default().insert(
                report.problem_name.clone(),
                (report.result.status.is_success(), report.result.iterations),
            );
        }
    }

    let taus: Vec<f64> = [1.0, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0].to_vec();
    let curves = performance_profile(&results, &taus).expect("profile");
    print!("{:<16}", "tau");
    for &tau in &taus {
        print!("{tau:>8.2}");
    }
    println!();
    for curve in &curves {
        print!("{:<16}", curve.label);
        for &(_, fraction) in &curve.points {
            print!("{fraction:>8.2}");
        }
        println!();
    }
}
