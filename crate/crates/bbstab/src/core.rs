//! Shared domain types: the objective interface, spectral bounds, the
//! gradient-norm regions used by the stabilization diagnostics, termination
//! statuses, and solver configuration.

use thiserror::Error;

/// Errors from constructing or querying the core domain types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("spectral bounds require 0 < lambda_lo <= lambda_hi, got ({lo}, {hi})")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("gradient norm must be finite and nonnegative, got {0}")]
    InvalidGradientNorm(f64),
    #[error("region classification requires a finite positive delta, got {0}")]
    InvalidDelta(f64),
}

/// Euclidean inner product with a fixed left-to-right accumulation order,
/// so that repeated runs produce bit-identical traces.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm, accumulated in the same order as [`dot`].
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Infinity norm; 0 for an empty slice.
pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// A differentiable objective exposing value and gradient evaluation.
///
/// The solver itself only calls [`Problem::gradient`]; function values are
/// consulted once, when generating the second starting point. Implementations
/// are expected to be immutable, which makes them safe to share across
/// concurrently running experiments.
pub trait Problem {
    /// Number of variables.
    fn dimension(&self) -> usize;

    /// Objective value at `x`.
    fn value(&self, x: &[f64]) -> f64;

    /// Gradient at `x`; must have length [`Problem::dimension`].
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Known minimizer, when the problem has one in closed form.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    /// Uniform Hessian eigenvalue bounds, when known.
    fn spectral_bounds(&self) -> Option<SpectralBounds> {
        None
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        (**self).minimizer()
    }
    fn spectral_bounds(&self) -> Option<SpectralBounds> {
        (**self).spectral_bounds()
    }
}

/// Uniform lower/upper bounds on the Hessian spectrum of a strongly convex
/// objective, with their ratio `kappa = lambda_hi / lambda_lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    lambda_lo: f64,
    lambda_hi: f64,
}

impl SpectralBounds {
    pub fn new(lambda_lo: f64, lambda_hi: f64) -> Result<Self, CoreError> {
        if !(lambda_lo > 0.0 && lambda_lo <= lambda_hi && lambda_hi.is_finite()) {
            return Err(CoreError::InvalidBounds {
                lo: lambda_lo,
                hi: lambda_hi,
            });
        }
        Ok(Self {
            lambda_lo,
            lambda_hi,
        })
    }

    pub fn lambda_lo(&self) -> f64 {
        self.lambda_lo
    }

    pub fn lambda_hi(&self) -> f64 {
        self.lambda_hi
    }

    /// Condition ratio `lambda_hi / lambda_lo`, always >= 1.
    pub fn kappa(&self) -> f64 {
        self.lambda_hi / self.lambda_lo
    }
}

/// Gradient-norm region of an iterate relative to the stabilization radius.
///
/// The thresholds are `lambda_lo * delta`, `lambda_hi * delta` and
/// `kappa * lambda_hi * delta`; the last two split the unbounded outer region
/// into an absorbing shell (`Omega3Prime`) and its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Region {
    Omega1,
    Omega2,
    Omega3Prime,
    Omega3Outer,
}

impl Region {
    /// True for both parts of the outer region, where the step cap binds.
    pub fn is_omega3(&self) -> bool {
        matches!(self, Region::Omega3Prime | Region::Omega3Outer)
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Region::Omega1 => "Omega1",
            Region::Omega2 => "Omega2",
            Region::Omega3Prime => "Omega3Prime",
            Region::Omega3Outer => "Omega3Outer",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Region {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Omega1" => Ok(Region::Omega1),
            "Omega2" => Ok(Region::Omega2),
            "Omega3Prime" => Ok(Region::Omega3Prime),
            "Omega3Outer" => Ok(Region::Omega3Outer),
            other => Err(format!("unknown region `{other}`")),
        }
    }
}

/// Classifies a gradient norm into its region for a given radius and bounds.
///
/// The four predicates partition `[0, inf)`: boundaries belong to the inner
/// region, so `g_norm == lambda_lo * delta` is `Omega1` and so on.
pub fn classify_region(
    g_norm: f64,
    delta: f64,
    bounds: SpectralBounds,
) -> Result<Region, CoreError> {
    if !g_norm.is_finite() || g_norm < 0.0 {
        return Err(CoreError::InvalidGradientNorm(g_norm));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(CoreError::InvalidDelta(delta));
    }
    let lo = bounds.lambda_lo() * delta;
    let hi = bounds.lambda_hi() * delta;
    let outer = bounds.kappa() * hi;
    Ok(if g_norm <= lo {
        Region::Omega1
    } else if g_norm <= hi {
        Region::Omega2
    } else if g_norm <= outer {
        Region::Omega3Prime
    } else {
        Region::Omega3Outer
    })
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The gradient norm fell to `rel_tol` times its starting value.
    Converged(usize),
    /// The iteration budget was exhausted without convergence.
    IterationLimit,
    /// An iterate, gradient, or stepsize stopped being a finite number.
    /// Recorded as an outcome rather than raised, so harness tables can
    /// report the failure as data.
    NonFiniteEncountered(usize),
    /// The gradient vanished exactly.
    ZeroGradient(usize),
}

impl Termination {
    /// Converged and exactly-zero-gradient runs both count as solved.
    pub fn is_success(&self) -> bool {
        matches!(self, Termination::Converged(_) | Termination::ZeroGradient(_))
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Termination::Converged(_) => "Converged",
            Termination::IterationLimit => "IterationLimit",
            Termination::NonFiniteEncountered(_) => "NonFiniteEncountered",
            Termination::ZeroGradient(_) => "ZeroGradient",
        };
        f.write_str(name)
    }
}

/// Which of the two spectral stepsize formulas drives the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepsizeRule {
    BB1,
    BB2,
}

impl std::fmt::Display for StepsizeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepsizeRule::BB1 => f.write_str("bb1"),
            StepsizeRule::BB2 => f.write_str("bb2"),
        }
    }
}

/// How the step-length cap `delta` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    /// No cap: reproduces the plain BB method exactly.
    Infinite,
    /// A fixed cap used on every iteration.
    Fixed(f64),
    /// Uncapped for the first three steps, then frozen at `c` times the
    /// smallest of those three step lengths for the rest of the run.
    Adaptive(f64),
}

/// Full configuration of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rule: StepsizeRule,
    pub delta: DeltaPolicy,
    pub max_iterations: usize,
    pub rel_tol: f64,
    /// Replace a nonpositive-curvature BB stepsize by `|s|/|y|` instead of
    /// using it raw. Only matters on nonconvex problems.
    pub safeguard_nonconvex: bool,
    /// Trial-step halvings allowed while generating the second start point.
    pub backtracking_max: usize,
}

impl SolverConfig {
    pub fn new(rule: StepsizeRule, delta: DeltaPolicy) -> Self {
        Self {
            rule,
            delta,
            max_iterations: 100_000,
            rel_tol: 1e-6,
            safeguard_nonconvex: true,
            backtracking_max: 30,
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_safeguard(mut self, on: bool) -> Self {
        self.safeguard_nonconvex = on;
        self
    }

    pub fn with_backtracking_max(mut self, backtracking_max: usize) -> Self {
        self.backtracking_max = backtracking_max;
        self
    }
}

/// Stopping test applied to `|g_k|` before anything else happens in an
/// iteration. Non-finite values are detected first (a NaN compares false
/// against every threshold), then the exact-zero stop, then convergence,
/// and only then the iteration budget, so a run that converges on its last
/// allowed iteration is reported as converged.
pub fn should_terminate(
    g_norm: f64,
    g0_norm: f64,
    iteration: usize,
    config: &SolverConfig,
) -> Option<Termination> {
    debug_assert!(g0_norm > 0.0);
    if !g_norm.is_finite() {
        Some(Termination::NonFiniteEncountered(iteration))
    } else if g_norm == 0.0 {
        Some(Termination::ZeroGradient(iteration))
    } else if g_norm <= config.rel_tol * g0_norm {
        Some(Termination::Converged(iteration))
    } else if iteration >= config.max_iterations {
        Some(Termination::IterationLimit)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bounds(lo: f64, hi: f64) -> SpectralBounds {
        SpectralBounds::new(lo, hi).unwrap()
    }

    #[test]
    fn classify_region_examples() {
        let b = bounds(1.0, 2.0);
        assert_eq!(classify_region(0.5, 1.0, b).unwrap(), Region::Omega1);
        assert_eq!(classify_region(3.0, 1.0, b).unwrap(), Region::Omega3Prime);
        assert_eq!(classify_region(5.0, 1.0, b).unwrap(), Region::Omega3Outer);
        assert_eq!(classify_region(1.5, 1.0, b).unwrap(), Region::Omega2);
    }

    #[test]
    fn classify_region_boundaries_go_inward() {
        let b = bounds(1.0, 2.0);
        assert_eq!(classify_region(1.0, 1.0, b).unwrap(), Region::Omega1);
        assert_eq!(classify_region(2.0, 1.0, b).unwrap(), Region::Omega2);
        assert_eq!(classify_region(4.0, 1.0, b).unwrap(), Region::Omega3Prime);
    }

    #[test]
    fn classify_region_rejects_bad_inputs() {
        let b = bounds(1.0, 2.0);
        assert!(classify_region(f64::NAN, 1.0, b).is_err());
        assert!(classify_region(f64::INFINITY, 1.0, b).is_err());
        assert!(classify_region(-1.0, 1.0, b).is_err());
        assert!(classify_region(1.0, 0.0, b).is_err());
        assert!(classify_region(1.0, f64::INFINITY, b).is_err());
    }

    #[test]
    fn spectral_bounds_validation() {
        assert!(SpectralBounds::new(0.0, 1.0).is_err());
        assert!(SpectralBounds::new(2.0, 1.0).is_err());
        assert!(SpectralBounds::new(-1.0, 1.0).is_err());
        assert!(SpectralBounds::new(1.0, f64::INFINITY).is_err());
        let b = bounds(2.0, 10.0);
        assert_eq!(b.kappa(), 5.0);
    }

    #[test]
    fn termination_examples() {
        let cfg = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Infinite);
        assert_eq!(
            should_terminate(9e-5, 100.0, 12, &cfg),
            Some(Termination::Converged(12))
        );
        assert_eq!(
            should_terminate(1.0, 100.0, 100_000, &cfg),
            Some(Termination::IterationLimit)
        );
        assert_eq!(
            should_terminate(f64::NAN, 1.0, 3, &cfg),
            Some(Termination::NonFiniteEncountered(3))
        );
        assert_eq!(should_terminate(1.0, 100.0, 12, &cfg), None);
    }

    #[test]
    fn termination_zero_gradient_and_precedence() {
        let cfg = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Infinite)
            .with_max_iterations(10);
        assert_eq!(
            should_terminate(0.0, 1.0, 4, &cfg),
            Some(Termination::ZeroGradient(4))
        );
        // Convergence on the final allowed iteration wins over the limit.
        assert_eq!(
            should_terminate(1e-9, 1.0, 10, &cfg),
            Some(Termination::Converged(10))
        );
        // Non-finite is reported even past the limit.
        assert_eq!(
            should_terminate(f64::INFINITY, 1.0, 11, &cfg),
            Some(Termination::NonFiniteEncountered(11))
        );
    }

    #[test]
    fn dot_and_norms() {
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 32.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(inf_norm(&[-7.0, 2.0]), 7.0);
        assert_eq!(inf_norm(&[]), 0.0);
    }

    fn region_rank(r: Region) -> u8 {
        match r {
            Region::Omega1 => 0,
            Region::Omega2 => 1,
            Region::Omega3Prime => 2,
            Region::Omega3Outer => 3,
        }
    }

    proptest! {
        // The four predicates are mutually exclusive and exhaustive over
        // [0, inf), and the classification is monotone in the gradient norm.
        #[test]
        fn region_partition_and_monotonicity(
            g1 in 0.0_f64..1e6,
            g2 in 0.0_f64..1e6,
            delta in 1e-6_f64..1e3,
            lo in 1e-3_f64..1e2,
            spread in 1.0_f64..1e3,
        ) {
            let b = bounds(lo, lo * spread);
            let lo_t = b.lambda_lo() * delta;
            let hi_t = b.lambda_hi() * delta;
            let outer_t = b.kappa() * hi_t;
            for &g in &[g1, g2, lo_t, hi_t, outer_t] {
                let r = classify_region(g, delta, b).unwrap();
                let memberships = [
                    g <= lo_t,
                    lo_t < g && g <= hi_t,
                    hi_t < g && g <= outer_t,
                    outer_t < g,
                ];
                prop_assert_eq!(memberships.iter().filter(|&&m| m).count(), 1);
                prop_assert!(memberships[region_rank(r) as usize]);
            }
            let (ga, gb) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let ra = classify_region(ga, delta, b).unwrap();
            let rb = classify_region(gb, delta, b).unwrap();
            prop_assert!(region_rank(ra) <= region_rank(rb));
        }
    }
}
