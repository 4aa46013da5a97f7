//! The stabilized spectral gradient iteration: gradient-only main loop with
//! the step cap `|x_{k+1} - x_k| <= delta`, the descent-based generation of
//! the second starting point, and per-iteration trace recording.

use thiserror::Error;

use crate::core::{
    classify_region, dot, inf_norm, norm, should_terminate, DeltaPolicy, Problem, Region,
    SolverConfig, Termination,
};
use crate::stepsize::{
    adaptive_delta, bb_raw, safeguarded_bb, StepBranch, StepPair, StepsizeError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("start point has {found} coordinates, problem has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("start point must be finite")]
    NonFiniteStart,
    #[error("the two starting points must differ")]
    IdenticalStartPoints,
    #[error("gradient vanishes at the start point; nothing to bootstrap")]
    ZeroInitialGradient,
    #[error("no descent after {attempts} step divisions while generating x1")]
    BootstrapFailed { attempts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Per-iteration memory of the method: everything the next update needs.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub k: usize,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    /// `x_k - x_{k-1}`, exactly as subtracted.
    pub s_prev: Vec<f64>,
    /// `g_k - g_{k-1}`, exactly as subtracted.
    pub y_prev: Vec<f64>,
    pub alpha_prev: f64,
}

/// One row of the per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `|g_k|` before the step.
    pub g_norm: f64,
    /// Length of the step taken at `k`, computed as `alpha * |g_k|`. This
    /// equals `|x_{k+1} - x_k|` up to rounding in `x`; the product form is
    /// used so that capped steps satisfy `s_norm <= delta` to a few ulps
    /// regardless of how large the iterates themselves are.
    pub s_norm: f64,
    pub alpha: f64,
    pub branch: StepBranch,
    /// Present when the radius in force is finite and spectral bounds are
    /// known.
    pub region: Option<Region>,
    /// Contraction factor `1 - lambda_lo * delta / |g_k|`, present exactly
    /// when the iterate is classified in the outer region.
    pub q_k: Option<f64>,
}

/// Complete outcome of a run.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Termination,
    /// The iteration counter at which the run stopped.
    pub iterations: usize,
    pub final_x: Vec<f64>,
    pub final_g_norm: f64,
    pub trace: Vec<TraceRecord>,
    /// Number of steps where the cap was strictly smaller than the BB value.
    pub stab_step_count: usize,
    pub last_stab_iteration: Option<usize>,
    /// First iteration whose step came from a BB formula (raw or
    /// safeguarded) rather than the cap.
    pub first_bb_iteration: Option<usize>,
    /// The radius in force at the end of the run; infinite when no cap was
    /// ever active.
    pub delta_used: f64,
}

/// Second starting point produced by the descent bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct Bootstrap {
    pub x1: Vec<f64>,
    /// Effective stepsize: `x1 = x0 - alpha0 * g0`.
    pub alpha0: f64,
    /// How many times the trial step was divided by 4.
    pub backtracks: usize,
    pub branch: StepBranch,
}

/// Generates the second starting point from a scaled steepest-descent trial
/// step `s0 = -g0 / |g0|_inf`, dividing it by 4 until the objective strictly
/// decreases. This is the only place the solver evaluates function values.
pub fn bootstrap_x1<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    backtracking_max: usize,
) -> Result<Bootstrap, SolveError> {
    let g0 = problem.gradient(x0);
    bootstrap_from_gradient(problem, x0, &g0, backtracking_max)
}

fn bootstrap_from_gradient<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    g0: &[f64],
    backtracking_max: usize,
) -> Result<Bootstrap, SolveError> {
    let scale = inf_norm(g0);
    if scale == 0.0 {
        return Err(SolveError::ZeroInitialGradient);
    }
    if !scale.is_finite() {
        return Err(SolveError::NonFiniteStart);
    }
    let f0 = problem.value(x0);
    let mut alpha0 = 1.0 / scale;
    for backtracks in 0..=backtracking_max {
        let x1: Vec<f64> = x0.iter().zip(g0).map(|(&xi, &gi)| xi - alpha0 * gi).collect();
        let f1 = problem.value(&x1);
        if f1 < f0 {
            return Ok(Bootstrap {
                x1,
                alpha0,
                backtracks,
                branch: StepBranch::Bootstrap,
            });
        }
        alpha0 /= 4.0;
    }
    Err(SolveError::BootstrapFailed {
        attempts: backtracking_max,
    })
}

/// Runs the method from a single starting point, generating the second one
/// with [`bootstrap_x1`]. The trace begins with a `Bootstrap` record at
/// `k = 0`; the convergence test is relative to `|g(x0)|`.
pub fn run<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    validate(problem, x0, config)?;
    let g0 = problem.gradient(x0);
    let g0_norm = norm(&g0);
    if let Some(early) = trivial_start(x0, &g0, g0_norm) {
        return Ok(early);
    }
    let boot = bootstrap_from_gradient(problem, x0, &g0, config.backtracking_max)?;
    let boot_record = TraceRecord {
        k: 0,
        g_norm: g0_norm,
        s_norm: boot.alpha0 * g0_norm,
        alpha: boot.alpha0,
        branch: StepBranch::Bootstrap,
        region: None,
        q_k: None,
    };
    Ok(drive(
        problem,
        x0.to_vec(),
        g0,
        boot.x1,
        boot.alpha0,
        Some(boot_record),
        config,
    ))
}

/// Runs the method from an explicitly supplied pair of starting points, as
/// used for quadratics where no descent test is needed. The trace starts at
/// `k = 1`.
pub fn run_from_pair<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    x1: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    validate(problem, x0, config)?;
    if x1.len() != problem.dimension() {
        return Err(SolveError::DimensionMismatch {
            expected: problem.dimension(),
            found: x1.len(),
        });
    }
    if !x1.iter().all(|v| v.is_finite()) {
        return Err(SolveError::NonFiniteStart);
    }
    if x0 == x1 {
        return Err(SolveError::IdenticalStartPoints);
    }
    let g0 = problem.gradient(x0);
    let g0_norm = norm(&g0);
    if let Some(early) = trivial_start(x0, &g0, g0_norm) {
        return Ok(early);
    }
    // Seed for the stepsize reused in the degenerate y = 0 corner; matches
    // the bootstrap scaling.
    let alpha_seed = 1.0 / inf_norm(&g0);
    Ok(drive(problem, x0.to_vec(), g0, x1.to_vec(), alpha_seed, None, config))
}

/// The plain BB method: [`run`] with the cap disabled, so benchmark tables
/// can label reference columns next to the stabilized ones.
pub fn reference_bb_run<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    let mut cfg = config.clone();
    cfg.delta = DeltaPolicy::Infinite;
    run(problem, x0, &cfg)
}

fn validate<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<(), SolveError> {
    if x0.len() != problem.dimension() {
        return Err(SolveError::DimensionMismatch {
            expected: problem.dimension(),
            found: x0.len(),
        });
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(SolveError::NonFiniteStart);
    }
    match config.delta {
        DeltaPolicy::Infinite => {}
        DeltaPolicy::Fixed(d) => {
            if !(d > 0.0 && d.is_finite()) {
                return Err(SolveError::InvalidConfig("fixed delta must be positive and finite"));
            }
        }
        DeltaPolicy::Adaptive(c) => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(SolveError::InvalidConfig("adaptive scaling must be positive and finite"));
            }
        }
    }
    if !(config.rel_tol > 0.0) {
        return Err(SolveError::InvalidConfig("rel_tol must be positive"));
    }
    if config.max_iterations == 0 {
        return Err(SolveError::InvalidConfig("max_iterations must be positive"));
    }
    Ok(())
}

/// Degenerate starts that never reach the main loop: an exactly stationary
/// x0 or a non-finite gradient at x0 become results, not errors, so harness
/// tables can report them.
fn trivial_start(x0: &[f64], _g0: &[f64], g0_norm: f64) -> Option<SolveResult> {
    let status = if !g0_norm.is_finite() {
        Termination::NonFiniteEncountered(0)
    } else if g0_norm == 0.0 {
        Termination::ZeroGradient(0)
    } else {
        return None;
    };
    Some(SolveResult {
        status,
        iterations: 0,
        final_x: x0.to_vec(),
        final_g_norm: g0_norm,
        trace: Vec::new(),
        stab_step_count: 0,
        last_stab_iteration: None,
        first_bb_iteration: None,
        delta_used: f64::INFINITY,
    })
}

/// Radius bookkeeping for the three policies. The adaptive policy runs
/// uncapped while the first three step lengths are collected, freezes the
/// radius at iteration 4, and never re-estimates; if any of the three norms
/// is unusable the run simply stays uncapped.
struct DeltaState {
    policy: DeltaPolicy,
    current: f64,
    collected: Vec<f64>,
}

impl DeltaState {
    fn new(policy: DeltaPolicy) -> Self {
        let current = match policy {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::Infinite | DeltaPolicy::Adaptive(_) => f64::INFINITY,
        };
        Self {
            policy,
            current,
            collected: Vec::with_capacity(3),
        }
    }

    fn on_iteration_start(&mut self, k: usize) {
        if let DeltaPolicy::Adaptive(c) = self.policy {
            if k == 4 && self.collected.len() == 3 {
                let norms = [self.collected[0], self.collected[1], self.collected[2]];
                if let Ok(d) = adaptive_delta(norms, c) {
                    self.current = d;
                }
            }
        }
    }

    fn on_step_taken(&mut self, k: usize, s_norm: f64) {
        if matches!(self.policy, DeltaPolicy::Adaptive(_)) && (1..=3).contains(&k) {
            self.collected.push(s_norm);
        }
    }
}

fn finish(
    status: Termination,
    iterations: usize,
    final_x: Vec<f64>,
    final_g_norm: f64,
    trace: Vec<TraceRecord>,
    delta_used: f64,
) -> SolveResult {
    let stab_step_count = trace
        .iter()
        .filter(|r| r.branch == StepBranch::StabCap)
        .count();
    let last_stab_iteration = trace
        .iter()
        .rev()
        .find(|r| r.branch == StepBranch::StabCap)
        .map(|r| r.k);
    let first_bb_iteration = trace
        .iter()
        .find(|r| matches!(r.branch, StepBranch::BBRaw | StepBranch::BBSafeguarded))
        .map(|r| r.k);
    SolveResult {
        status,
        iterations,
        final_x,
        final_g_norm,
        trace,
        stab_step_count,
        last_stab_iteration,
        first_bb_iteration,
        delta_used,
    }
}

/// The main loop. `x0`, `g0` are the user's starting point and its gradient
/// (the reference for the relative stopping test); `x1` the second start;
/// `alpha_seed` the stepsize reused if a gradient difference ever vanishes
/// while the run is uncapped.
fn drive<P: Problem + ?Sized>(
    problem: &P,
    x0: Vec<f64>,
    g0: Vec<f64>,
    x1: Vec<f64>,
    alpha_seed: f64,
    boot_record: Option<TraceRecord>,
    config: &SolverConfig,
) -> SolveResult {
    let g0_norm = norm(&g0);
    let bounds = problem.spectral_bounds();
    let mut delta_state = DeltaState::new(config.delta);
    let mut trace: Vec<TraceRecord> = boot_record.into_iter().collect();

    let mut state = IterateState {
        k: 1,
        g: problem.gradient(&x1),
        x: x1,
        s_prev: Vec::new(),
        y_prev: Vec::new(),
        alpha_prev: alpha_seed,
    };
    let mut x_prev = x0;
    let mut g_prev = g0;

    loop {
        let k = state.k;
        let g_norm = norm(&state.g);
        if let Some(status) = should_terminate(g_norm, g0_norm, k, config) {
            return finish(status, k, state.x, g_norm, trace, delta_state.current);
        }
        delta_state.on_iteration_start(k);
        let delta = delta_state.current;

        // s_{k-1} and y_{k-1}, formed by subtraction exactly as written.
        let s: Vec<f64> = state.x.iter().zip(&x_prev).map(|(&a, &b)| a - b).collect();
        let y: Vec<f64> = state.g.iter().zip(&g_prev).map(|(&a, &b)| a - b).collect();
        let pair = StepPair::new(s, y).expect("s and y share the problem dimension");

        let (alpha, branch) = select_stepsize(&pair, state.alpha_prev, g_norm, delta, config);
        (state.s_prev, state.y_prev) = pair.into_parts();
        if !alpha.is_finite() {
            return finish(
                Termination::NonFiniteEncountered(k),
                k,
                state.x,
                g_norm,
                trace,
                delta_state.current,
            );
        }

        let x_next: Vec<f64> = state
            .x
            .iter()
            .zip(&state.g)
            .map(|(&xi, &gi)| xi - alpha * gi)
            .collect();
        let s_norm = alpha * g_norm;

        let (region, q_k) = match (bounds, delta.is_finite()) {
            (Some(b), true) => {
                let region = classify_region(g_norm, delta, b).ok();
                let q = region.filter(|r| r.is_omega3()).map(|_| {
                    1.0 - b.lambda_lo() * delta / g_norm
                });
                (region, q)
            }
            _ => (None, None),
        };
        trace.push(TraceRecord {
            k,
            g_norm,
            s_norm,
            alpha,
            branch,
            region,
            q_k,
        });
        delta_state.on_step_taken(k, s_norm);

        if !s_norm.is_finite() {
            // The new iterate already left the representable range; record
            // the failure against the iterate it produced.
            return finish(
                Termination::NonFiniteEncountered(k + 1),
                k + 1,
                x_next,
                f64::NAN,
                trace,
                delta_state.current,
            );
        }

        let g_next = problem.gradient(&x_next);
        x_prev = std::mem::replace(&mut state.x, x_next);
        g_prev = std::mem::replace(&mut state.g, g_next);
        state.alpha_prev = alpha;
        state.k += 1;
    }
}

fn select_stepsize(
    pair: &StepPair,
    alpha_prev: f64,
    g_norm: f64,
    delta: f64,
    config: &SolverConfig,
) -> (f64, StepBranch) {
    let alpha_stab = delta / g_norm; // g_norm > 0 past the stopping test

    let bb = if config.safeguard_nonconvex {
        match safeguarded_bb(pair, config.rule) {
            Ok(out) => Some((out.alpha, out.branch)),
            // y = 0: no curvature at all. Take the cap when there is one,
            // otherwise repeat the previous stepsize.
            Err(StepsizeError::DegeneratePair) => None,
            Err(_) => unreachable!("pair lengths match by construction"),
        }
    } else {
        let raw = bb_raw(pair, config.rule);
        if raw.is_nan() && dot(pair.y(), pair.y()) == 0.0 {
            None
        } else {
            Some((raw, StepBranch::BBRaw))
        }
    };

    match bb {
        Some((alpha_bb, bb_branch)) => {
            if alpha_stab < alpha_bb {
                (alpha_stab, StepBranch::StabCap)
            } else {
                (alpha_bb, bb_branch)
            }
        }
        None => {
            if delta.is_finite() {
                (alpha_stab, StepBranch::StabCap)
            } else {
                (alpha_prev, StepBranch::BBSafeguarded)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{SolverConfig, StepsizeRule};
    use crate::oracles::RecordingProblem;
    use crate::problems::{
        diagonal_quadratic, Counterexample, CounterexampleConstants, Raydan,
        SeparableCounterexample,
    };

    fn cfg(rule: StepsizeRule, delta: DeltaPolicy) -> SolverConfig {
        SolverConfig::new(rule, delta)
    }

    /// Scalar quadratic x^2 / 2 for bootstrap tests.
    struct HalfSquare;
    impl Problem for HalfSquare {
        fn dimension(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * x[0] * x[0]
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0]]
        }
    }

    /// Linear objective: constant gradient, y = 0 on every pair.
    struct Linear(Vec<f64>);
    impl Problem for Linear {
        fn dimension(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            dot(&self.0, x)
        }
        fn gradient(&self, _x: &[f64]) -> Vec<f64> {
            self.0.clone()
        }
    }

    /// A "problem" whose value never decreases, to force bootstrap failure.
    struct NoDescent;
    impl Problem for NoDescent {
        fn dimension(&self) -> usize {
            1
        }
        fn value(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn gradient(&self, _x: &[f64]) -> Vec<f64> {
            vec![1.0]
        }
    }

    #[test]
    fn bootstrap_half_square() {
        let boot = bootstrap_x1(&HalfSquare, &[2.0], 30).unwrap();
        // g0 = 2, alpha0 = 1/2, s0 = -1, f(1) < f(2).
        assert_eq!(boot.x1, vec![1.0]);
        assert_eq!(boot.alpha0, 0.5);
        assert_eq!(boot.backtracks, 0);
    }

    #[test]
    fn bootstrap_zero_gradient() {
        assert_eq!(
            bootstrap_x1(&HalfSquare, &[0.0], 30),
            Err(SolveError::ZeroInitialGradient)
        );
    }

    #[test]
    fn bootstrap_backtracks_until_descent() {
        // x0 = 0.1: alpha0 = 10, first two trials overshoot.
        let boot = bootstrap_x1(&HalfSquare, &[0.1], 30).unwrap();
        assert_eq!(boot.backtracks, 2);
        assert!((boot.x1[0] - 0.0375).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_gives_up() {
        assert_eq!(
            bootstrap_x1(&NoDescent, &[1.0], 5),
            Err(SolveError::BootstrapFailed { attempts: 5 })
        );
    }

    #[test]
    fn bootstrap_raydan_first_trial() {
        let p = Raydan::new(2).unwrap();
        let boot = bootstrap_x1(&p, &[-10.0, -10.0], 30).unwrap();
        assert_eq!(boot.backtracks, 0);
        // g0 is proportional to (1, 2), so the scaled trial step is
        // exactly (0.5, 1.0).
        assert!((boot.x1[0] + 9.5).abs() < 1e-12);
        assert!((boot.x1[1] + 9.0).abs() < 1e-12);
    }

    #[test]
    fn cycle_on_counterexample_with_no_cap() {
        let c = CounterexampleConstants::new();
        let p = Counterexample;
        let rec = RecordingProblem::new(&p);
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Infinite).with_max_iterations(200);
        let result = run_from_pair(&rec, &[-c.b], &[-c.a], &config).unwrap();
        assert_eq!(result.status, Termination::IterationLimit);
        assert_eq!(result.stab_step_count, 0);

        let pts = rec.gradient_points();
        // Points are visited in order x0, x1, x2, ...
        assert!((pts[2][0] - c.b).abs() < 1e-12, "x2 = {}", pts[2][0]);
        assert!((pts[3][0] - c.a).abs() < 1e-12, "x3 = {}", pts[3][0]);
        assert!((pts[4][0] + c.b).abs() < 1e-12, "x4 = {}", pts[4][0]);
        assert!((pts[5][0] + c.a).abs() < 1e-12, "x5 = {}", pts[5][0]);
    }

    #[test]
    fn separable_cycle_matches_univariate_stepsizes() {
        let c = CounterexampleConstants::new();
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Infinite).with_max_iterations(30);
        let uni = run_from_pair(&Counterexample, &[-c.b], &[-c.a], &config).unwrap();
        let p3 = SeparableCounterexample::new(3).unwrap();
        let rec = RecordingProblem::new(&p3);
        let sep = run_from_pair(&rec, &[-c.b; 3], &[-c.a; 3], &config).unwrap();
        assert_eq!(uni.trace.len(), sep.trace.len());
        // The coordinates decouple; the n-dimensional stepsizes agree with
        // the univariate ones up to the rounding of the longer dot products.
        for (u, s) in uni.trace.iter().zip(&sep.trace) {
            assert!(
                (u.alpha - s.alpha).abs() <= 4.0 * f64::EPSILON * u.alpha.abs(),
                "stepsize differs at k={}: {} vs {}",
                u.k,
                u.alpha,
                s.alpha
            );
        }
        // And the vector iteration cycles with the same period 4.
        let points = rec.gradient_points();
        for k in 2..points.len() - 4 {
            for i in 0..3 {
                assert!(
                    (points[k][i] - points[k + 4][i]).abs() < 1e-10,
                    "no 4-cycle at k={k}"
                );
            }
        }
    }

    #[test]
    fn stabilization_converges_on_counterexample() {
        let c = CounterexampleConstants::new();
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Fixed(1.0))
            .with_max_iterations(500)
            .with_rel_tol(1e-12);
        let result = run_from_pair(&Counterexample, &[-c.b], &[-c.a], &config).unwrap();
        assert!(result.status.is_success(), "status={:?}", result.status);
        assert!(result.final_x[0].abs() < 1e-8);
        assert!(result.stab_step_count > 0);
    }

    #[test]
    fn infinite_policy_reports_no_stab_steps() {
        let p = diagonal_quadratic(&[1.0, 3.0, 7.0]).unwrap();
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Infinite);
        let r = run_from_pair(&p, &[5.0, -3.0, 2.0], &[4.0, -2.0, 1.5], &config).unwrap();
        assert_eq!(r.status, Termination::Converged(r.iterations));
        assert_eq!(r.stab_step_count, 0);
        assert_eq!(r.last_stab_iteration, None);
        assert!(r.trace.iter().all(|t| t.branch != StepBranch::StabCap));
        assert!(r.trace.iter().all(|t| t.region.is_none()));
        assert_eq!(r.delta_used, f64::INFINITY);
    }

    #[test]
    fn reference_run_is_bitwise_alias_of_infinite_policy() {
        let p = diagonal_quadratic(&[1.0, 2.0]).unwrap();
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Fixed(0.7));
        let reference = reference_bb_run(&p, &[0.0, 0.0], &config).unwrap();
        let infinite = run(
            &p,
            &[0.0, 0.0],
            &cfg(StepsizeRule::BB1, DeltaPolicy::Infinite),
        )
        .unwrap();
        assert_eq!(reference.status, infinite.status);
        assert_eq!(reference.final_x, infinite.final_x);
        assert_eq!(reference.trace.len(), infinite.trace.len());
        for (a, b) in reference.trace.iter().zip(&infinite.trace) {
            assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
            assert_eq!(a.g_norm.to_bits(), b.g_norm.to_bits());
            assert_eq!(a.s_norm.to_bits(), b.s_norm.to_bits());
        }
    }

    #[test]
    fn huge_fixed_cap_never_binds() {
        let p = diagonal_quadratic(&[1.0, 2.0]).unwrap();
        let capped = run(&p, &[0.0, 0.0], &cfg(StepsizeRule::BB1, DeltaPolicy::Fixed(1e6))).unwrap();
        let free = run(&p, &[0.0, 0.0], &cfg(StepsizeRule::BB1, DeltaPolicy::Infinite)).unwrap();
        assert_eq!(capped.stab_step_count, 0);
        assert_eq!(capped.trace.len(), free.trace.len());
        for (a, b) in capped.trace.iter().zip(&free.trace) {
            assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
            assert_eq!(a.s_norm.to_bits(), b.s_norm.to_bits());
        }
    }

    #[test]
    fn fixed_cap_bounds_every_step() {
        let p = diagonal_quadratic(&(1..=10).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let delta = 0.05;
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Fixed(delta));
        let x0 = vec![25.0; 10];
        let r = run(&p, &x0, &config).unwrap();
        assert!(r.status.is_success());
        for t in r.trace.iter().filter(|t| t.k >= 1) {
            assert!(
                t.s_norm <= delta * (1.0 + 4.0 * f64::EPSILON),
                "step at k={} has length {} > {delta}",
                t.k,
                t.s_norm
            );
        }
    }

    #[test]
    fn adaptive_policy_freezes_after_three_steps() {
        let p = diagonal_quadratic(&[1.0, 4.0, 9.0]).unwrap();
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Adaptive(0.25));
        let r = run(&p, &[10.0, -10.0, 10.0], &config).unwrap();
        assert!(r.status.is_success());
        assert!(r.delta_used.is_finite());
        // Uncapped while the first three step norms are collected.
        let expected = 0.25
            * r.trace[1..=3]
                .iter()
                .map(|t| t.s_norm)
                .fold(f64::INFINITY, f64::min);
        assert_eq!(r.delta_used, expected);
        for t in &r.trace[1..=3] {
            assert_ne!(t.branch, StepBranch::StabCap);
        }
        for t in r.trace.iter().filter(|t| t.k >= 4) {
            assert!(t.s_norm <= r.delta_used * (1.0 + 4.0 * f64::EPSILON));
        }
    }

    #[test]
    fn adaptive_policy_stays_uncapped_when_run_ends_early() {
        let p = diagonal_quadratic(&[1.0, 2.0]).unwrap();
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Adaptive(0.25)).with_rel_tol(0.9);
        let r = run(&p, &[0.5, 0.5], &config).unwrap();
        assert!(r.iterations <= 3, "converged fast: {:?}", r.status);
        assert_eq!(r.delta_used, f64::INFINITY);
    }

    #[test]
    fn linear_problem_takes_cap_or_reuses_alpha() {
        let p = Linear(vec![3.0, 4.0]); // |g| = 5 everywhere
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Fixed(2.0)).with_max_iterations(10);
        let r = run_from_pair(&p, &[0.0, 0.0], &[1.0, 1.0], &config).unwrap();
        assert_eq!(r.status, Termination::IterationLimit);
        for t in &r.trace {
            assert_eq!(t.branch, StepBranch::StabCap);
            assert!((t.alpha - 2.0 / 5.0).abs() < 1e-15);
            assert!((t.s_norm - 2.0).abs() < 1e-12);
        }

        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Infinite).with_max_iterations(5);
        let r = run_from_pair(&p, &[0.0, 0.0], &[1.0, 1.0], &config).unwrap();
        assert_eq!(r.status, Termination::IterationLimit);
        // alpha seeded from 1/|g0|_inf and reused on every degenerate pair.
        for t in &r.trace {
            assert_eq!(t.branch, StepBranch::BBSafeguarded);
            assert_eq!(t.alpha, 0.25);
        }
    }

    #[test]
    fn raydan_plain_bb_fails_nonfinite() {
        let p = Raydan::new(1000).unwrap();
        let x0 = vec![-10.0; 1000];
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Infinite);
        let r = run(&p, &x0, &config).unwrap();
        assert!(
            matches!(r.status, Termination::NonFiniteEncountered(_))
                || r.status == Termination::IterationLimit,
            "status={:?}",
            r.status
        );
    }

    #[test]
    fn gradient_only_after_bootstrap() {
        let p = Raydan::new(20).unwrap();
        let rec = RecordingProblem::counting_only(&p);
        let config = cfg(StepsizeRule::BB2, DeltaPolicy::Fixed(2.0));
        let boot = bootstrap_x1(&p, &[-3.0; 20], 30).unwrap();
        let values_during_bootstrap = 1 + (boot.backtracks + 1);

        let r = run(&rec, &[-3.0; 20], &config).unwrap();
        assert!(r.status.is_success());
        assert_eq!(rec.value_calls(), values_during_bootstrap);
        // One gradient per visited point: x0 plus one per iteration, so the
        // iteration count equals the gradient-evaluation count less one.
        assert_eq!(rec.gradient_calls(), r.iterations + 1);
    }

    #[test]
    fn zero_gradient_start_is_a_result() {
        let p = diagonal_quadratic(&[1.0, 2.0]).unwrap();
        let r = run(&p, &[1.0, 1.0], &cfg(StepsizeRule::BB1, DeltaPolicy::Infinite)).unwrap();
        assert_eq!(r.status, Termination::ZeroGradient(0));
        assert_eq!(r.iterations, 0);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn nonfinite_gradient_at_start_is_a_result() {
        let p = Raydan::new(2).unwrap();
        let r = run(&p, &[800.0, 0.0], &cfg(StepsizeRule::BB1, DeltaPolicy::Infinite)).unwrap();
        assert_eq!(r.status, Termination::NonFiniteEncountered(0));
    }

    #[test]
    fn start_validation() {
        let p = diagonal_quadratic(&[1.0, 2.0]).unwrap();
        let config = cfg(StepsizeRule::BB1, DeltaPolicy::Infinite);
        assert!(matches!(
            run(&p, &[1.0], &config),
            Err(SolveError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            run(&p, &[f64::NAN, 0.0], &config),
            Err(SolveError::NonFiniteStart)
        ));
        assert!(matches!(
            run_from_pair(&p, &[1.0, 2.0], &[1.0, 2.0], &config),
            Err(SolveError::IdenticalStartPoints)
        ));
        assert!(matches!(
            run(&p, &[0.0, 0.0], &cfg(StepsizeRule::BB1, DeltaPolicy::Fixed(-1.0))),
            Err(SolveError::InvalidConfig(_))
        ));
        assert!(matches!(
            run(&p, &[0.0, 0.0], &cfg(StepsizeRule::BB1, DeltaPolicy::Adaptive(0.0))),
            Err(SolveError::InvalidConfig(_))
        ));
    }

    #[test]
    fn trace_row_count_matches_iterations_for_bootstrap_runs() {
        let p = diagonal_quadratic(&[2.0]).unwrap();
        let r = run(&p, &[0.0], &cfg(StepsizeRule::BB1, DeltaPolicy::Infinite)).unwrap();
        match r.status {
            Termination::Converged(k) | Termination::ZeroGradient(k) => {
                assert_eq!(r.trace.len(), k, "bootstrap row plus k-1 steps");
            }
            other => panic!("unexpected status {other:?}"),
        }
    }
}
