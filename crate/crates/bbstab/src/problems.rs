//! Analytic test objectives: a strongly convex univariate function on which
//! the plain BB method cycles among four points, its separable n-dimensional
//! extension, Raydan's Strictly Convex 2 function, the extended Rosenbrock
//! function, and a diagonal quadratic generator.

use thiserror::Error;

use crate::core::{Problem, SpectralBounds};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("extended Rosenbrock requires an even dimension, got {0}")]
    OddDimension(usize),
    #[error("diagonal quadratic requires positive eigenvalues, got {0}")]
    NonPositiveEigenvalue(f64),
    #[error("diagonal quadratic requires at least one eigenvalue")]
    EmptySpectrum,
}

/// Constants of the cycling counterexample, derived from sqrt(5) at runtime
/// so the branch boundaries of the piecewise definition match to machine
/// precision.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleConstants {
    /// Boundary between the quartic middle piece and the quadratic tails.
    pub a: f64,
    /// Starting abscissa of the 4-cycle: the orbit visits -b, -a, b, a.
    pub b: f64,
    /// Quadratic coefficient of the middle piece.
    pub c1: f64,
    /// Quartic coefficient of the middle piece (negative).
    pub c2: f64,
    /// Value of the middle piece at the boundary, used to glue the tails.
    pub f_a: f64,
}

impl CounterexampleConstants {
    pub fn new() -> Self {
        let r5 = 5.0_f64.sqrt();
        let a = r5 - 1.0;
        let b = r5 + 3.0;
        let c1 = (3.0 * r5 + 8.0) / 4.0;
        let c2 = -(5.0 * r5 + 11.0) / 32.0;
        let f_a = c1 * a * a / 2.0 + c2 * a.powi(4) / 4.0;
        Self { a, b, c1, c2, f_a }
    }
}

impl Default for CounterexampleConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Value of the piecewise counterexample function: quadratic tails with
/// slope 1/2 glued C2-continuously to a quartic middle on [-a, a].
pub fn counterexample_value(x: f64) -> f64 {
    let c = CounterexampleConstants::new();
    let r5 = 5.0_f64.sqrt();
    if x < -c.a {
        0.25 * (x + c.a) * (x + c.a) - (r5 + 1.0) * (x + c.a) + c.f_a
    } else if x <= c.a {
        c.c1 / 2.0 * x * x + c.c2 / 4.0 * x.powi(4)
    } else {
        0.25 * (x - c.a) * (x - c.a) + (r5 + 1.0) * (x - c.a) + c.f_a
    }
}

/// Derivative of [`counterexample_value`]; an odd, monotonically increasing,
/// Lipschitz function with slope between 1/2 and c1 everywhere.
pub fn counterexample_grad(x: f64) -> f64 {
    let c = CounterexampleConstants::new();
    let r5 = 5.0_f64.sqrt();
    if x < -c.a {
        0.5 * (x + c.a) - r5 - 1.0
    } else if x <= c.a {
        c.c1 * x + c.c2 * x * x * x
    } else {
        0.5 * (x - c.a) + r5 + 1.0
    }
}

/// The univariate counterexample as a [`Problem`] (dimension 1). The spectral
/// bounds are the second-derivative range [1/2, c1].
#[derive(Debug, Clone, Copy)]
pub struct Counterexample;

impl Problem for Counterexample {
    fn dimension(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        counterexample_value(x[0])
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![counterexample_grad(x[0])]
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0])
    }
    fn spectral_bounds(&self) -> Option<SpectralBounds> {
        let c = CounterexampleConstants::new();
        Some(SpectralBounds::new(0.5, c.c1).expect("0.5 <= c1"))
    }
}

/// Sum of `n` independent copies of the counterexample, one per coordinate.
/// Started with every coordinate on the cycle, the whole vector iteration
/// cycles exactly like the univariate case.
#[derive(Debug, Clone, Copy)]
pub struct SeparableCounterexample {
    n: usize,
}

impl SeparableCounterexample {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::ZeroDimension);
        }
        Ok(Self { n })
    }
}

impl Problem for SeparableCounterexample {
    fn dimension(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| counterexample_value(xi)).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| counterexample_grad(xi)).collect()
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.n])
    }
    fn spectral_bounds(&self) -> Option<SpectralBounds> {
        Counterexample.spectral_bounds()
    }
}

/// Raydan's Strictly Convex 2 function `f(x) = sum_i i (e^{x_i} - x_i) / 10`.
///
/// Exponentials are evaluated without clamping: overflow for large positive
/// coordinates propagates as `+inf` and is picked up by the solver's
/// non-finite detection, which is exactly the plain-BB failure mode this
/// function is used to exhibit.
#[derive(Debug, Clone, Copy)]
pub struct Raydan {
    n: usize,
}

impl Raydan {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::ZeroDimension);
        }
        Ok(Self { n })
    }
}

pub fn raydan_value(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| (i + 1) as f64 * (xi.exp() - xi) / 10.0)
        .sum()
}

pub fn raydan_grad(x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| (i + 1) as f64 * (xi.exp() - 1.0) / 10.0)
        .collect()
}

impl Problem for Raydan {
    fn dimension(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        raydan_value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        raydan_grad(x)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.n])
    }
    // No uniform Hessian bounds: i * e^{x_i} / 10 is unbounded above and
    // approaches zero as x_i -> -inf.
}

/// Extended Rosenbrock in the separable-pairs variant:
/// `f = sum over pairs of 100 (x_{2i} - x_{2i-1}^2)^2 + (1 - x_{2i-1})^2`.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedRosenbrock {
    n: usize,
}

impl ExtendedRosenbrock {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::ZeroDimension);
        }
        if n % 2 != 0 {
            return Err(ProblemError::OddDimension(n));
        }
        Ok(Self { n })
    }

    /// The conventional starting point (-1.2, 1, -1.2, 1, ...).
    pub fn standard_start(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| if i % 2 == 0 { -1.2 } else { 1.0 })
            .collect()
    }
}

pub fn extended_rosenbrock_value(x: &[f64]) -> f64 {
    assert!(x.len() % 2 == 0, "extended Rosenbrock needs an even dimension");
    x.chunks_exact(2)
        .map(|p| {
            let (u, v) = (p[0], p[1]);
            let t = v - u * u;
            100.0 * t * t + (1.0 - u) * (1.0 - u)
        })
        .sum()
}

pub fn extended_rosenbrock_grad(x: &[f64]) -> Vec<f64> {
    assert!(x.len() % 2 == 0, "extended Rosenbrock needs an even dimension");
    let mut g = vec![0.0; x.len()];
    for (i, p) in x.chunks_exact(2).enumerate() {
        let (u, v) = (p[0], p[1]);
        let t = v - u * u;
        g[2 * i] = -400.0 * u * t - 2.0 * (1.0 - u);
        g[2 * i + 1] = 200.0 * t;
    }
    g
}

impl Problem for ExtendedRosenbrock {
    fn dimension(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        extended_rosenbrock_value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        extended_rosenbrock_grad(x)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0; self.n])
    }
}

/// Convex quadratic `f = x.diag(lambda).x / 2 - b.x` with `b = diag(lambda) e`,
/// so the minimizer is the all-ones vector and the spectral bounds are the
/// extreme eigenvalues, known exactly.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    eigenvalues: Vec<f64>,
    rhs: Vec<f64>,
}

/// Builds the diagonal quadratic, rejecting empty or non-positive spectra.
pub fn diagonal_quadratic(eigenvalues: &[f64]) -> Result<DiagonalQuadratic, ProblemError> {
    if eigenvalues.is_empty() {
        return Err(ProblemError::EmptySpectrum);
    }
    for &l in eigenvalues {
        if !(l > 0.0 && l.is_finite()) {
            return Err(ProblemError::NonPositiveEigenvalue(l));
        }
    }
    Ok(DiagonalQuadratic {
        rhs: eigenvalues.to_vec(),
        eigenvalues: eigenvalues.to_vec(),
    })
}

impl DiagonalQuadratic {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl Problem for DiagonalQuadratic {
    fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eigenvalues
            .iter()
            .zip(x)
            .zip(&self.rhs)
            .map(|((&l, &xi), &bi)| 0.5 * l * xi * xi - bi * xi)
            .sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(x)
            .zip(&self.rhs)
            .map(|((&l, &xi), &bi)| l * xi - bi)
            .collect()
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0; self.eigenvalues.len()])
    }
    fn spectral_bounds(&self) -> Option<SpectralBounds> {
        let lo = self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        SpectralBounds::new(lo, hi).ok()
    }
}
