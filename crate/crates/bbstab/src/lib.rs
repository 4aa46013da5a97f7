//! Gradient-only unconstrained optimization with the Barzilai-Borwein
//! stepsizes and their stabilized variants.
//!
//! The plain BB method can take arbitrarily long steps and, on some strongly
//! convex functions, fails to converge at all; this crate pairs the two BB
//! stepsize rules with a stabilization cap that bounds the distance between
//! successive iterates by a radius `delta`, chosen fixed, adaptively from
//! the first three step lengths, or infinite (which recovers plain BB
//! exactly). No line search is involved and, past the initial bootstrap
//! step, only gradient values are used.
//!
//! Alongside the solver the crate ships:
//!
//! - analytic test objectives, including a piecewise strongly convex
//!   function on which plain BB provably cycles among four points
//!   ([`problems`]);
//! - a Matrix Market reader and a sparse quadratic objective
//!   `x.Ax/2 - b.x` with `b = A e` ([`quadratic_io`]);
//! - runtime diagnostics that classify every iterate into gradient-norm
//!   regions and track the per-step contraction factor ([`core`],
//!   [`solver::TraceRecord`]);
//! - independent oracles (finite differences, search-based stepsizes, cycle
//!   detection, envelope fits) used by the tests and the `check` command
//!   ([`oracles`]);
//! - a benchmark harness with CSV traces, summary tables and performance
//!   profiles ([`harness`]).
//!
//! # Example
//!
//! ```
//! use bbstab::core::{DeltaPolicy, SolverConfig, StepsizeRule};
//! use bbstab::problems::diagonal_quadratic;
//! use bbstab::solver::run;
//!
//! let problem = diagonal_quadratic(&[1.0, 4.0, 10.0]).unwrap();
//! let config = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Adaptive(0.25));
//! let result = run(&problem, &[8.0, -3.0, 5.0], &config).unwrap();
//!
//! assert!(result.status.is_success());
//! let solution = problem.minimizer().unwrap();
//! for (xi, si) in result.final_x.iter().zip(&solution) {
//!     assert!((xi - si).abs() < 1e-4);
//! }
//! # use bbstab::core::Problem;
//! ```
//!
//! The runnable examples under `examples/` demonstrate each capability end
//! to end; `cargo run --example cycle_and_stabilization` is a good start.

pub mod core;
pub mod harness;
pub mod oracles;
pub mod problems;
pub mod quadratic_io;
pub mod solver;
pub mod stepsize;

pub use crate::core::{
    DeltaPolicy, Problem, Region, SolverConfig, SpectralBounds, StepsizeRule, Termination,
};
pub use crate::solver::{run, run_from_pair, SolveResult, TraceRecord};
