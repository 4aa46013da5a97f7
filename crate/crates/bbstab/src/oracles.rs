//! Independent verification oracles used by the test suite and the `check`
//! command: central-difference gradients, a search-based least-squares
//! stepsize oracle, cycle detection on iterate sequences, and geometric
//! envelope fitting for convergence rates. Everything here deliberately
//! avoids the closed forms it is used to verify.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::core::{norm, Problem, SpectralBounds};
use crate::stepsize::StepPair;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("cycle detection over {have} iterates needs at least {need}")]
    WindowTooShort { have: usize, need: usize },
    #[error("envelope fit needs at least {need} values, got {have}")]
    SequenceTooShort { have: usize, need: usize },
    #[error("envelope fit requires positive values, got {0}")]
    NonPositiveValue(f64),
    #[error("non-finite objective value in a finite-difference stencil at coordinate {0}")]
    NonFiniteStencil(usize),
}

/// Maximum mismatch between the analytic gradient and central differences,
/// coordinate by coordinate, each scaled by `max(1, |g_i|)` so that near-zero
/// gradients are compared absolutely.
///
/// The stencil width per coordinate is `h * max(1, |x_i|)`.
pub fn fd_gradient_check<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    h: f64,
) -> Result<f64, OracleError> {
    let g = problem.gradient(x);
    let mut worst = 0.0_f64;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let hi = h * x[i].abs().max(1.0);
        xp[i] = x[i] + hi;
        let fp = problem.value(&xp);
        xp[i] = x[i] - hi;
        let fm = problem.value(&xp);
        xp[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(OracleError::NonFiniteStencil(i));
        }
        let fd = (fp - fm) / (2.0 * hi);
        let err = (fd - g[i]).abs() / g[i].abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Locates the minimizer of `f` over `[lo, hi]` by a coarse grid scan
/// followed by one parabolic-vertex refinement around the best cell. The
/// residuals being minimized here are exactly quadratic in the scalar, so
/// the three-point vertex recovers the minimizer to near machine precision
/// while staying a pure search over function values.
fn argmin_scan_parabolic<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cells: usize) -> f64 {
    let h = (hi - lo) / cells as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=cells {
        let v = f(lo + i as f64 * h);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let center = lo + best_i.clamp(1, cells - 1) as f64 * h;
    let (f1, f2, f3) = (f(center - h), f(center), f(center + h));
    let curvature = f1 - 2.0 * f2 + f3;
    if curvature > 0.0 {
        (center + 0.5 * h * (f1 - f3) / curvature).clamp(lo, hi)
    } else {
        center
    }
}

fn squared_residual(scaled: &[f64], target: &[f64], t: f64) -> f64 {
    // |t * scaled - target|^2, evaluated elementwise.
    scaled
        .iter()
        .zip(target)
        .map(|(&a, &b)| {
            let r = t * a - b;
            r * r
        })
        .sum()
}

/// Search-based solutions of the two scalar least-squares secant problems:
/// minimize `|s/alpha - y|` and `|s - alpha y|` over positive alpha.
///
/// Both are located by scanning a Cauchy-Schwarz bracket and refining, never
/// through the closed-form quotients, so the result is an independent check
/// of `bb1` and `bb2`. Requires nonzero `s` and `y`.
pub fn stepsize_oracle(pair: &StepPair) -> (f64, f64) {
    let s = pair.s();
    let y = pair.y();
    let s_norm = norm(s);
    let y_norm = norm(y);
    assert!(s_norm > 0.0 && y_norm > 0.0, "oracle needs nonzero s and y");

    // First problem in terms of beta = 1/alpha: minimize |beta s - y| over
    // beta in [0, 2 |y|/|s|]; the unconstrained optimum is at most
    // |y|/|s| in magnitude.
    let beta_hi = 2.0 * y_norm / s_norm;
    let beta = argmin_scan_parabolic(|b| squared_residual(s, y, b), 0.0, beta_hi, 32);
    let alpha1 = 1.0 / beta;

    // Second problem directly in alpha: minimize |s - alpha y| over
    // [0, 2 |s|/|y|].
    let alpha_hi = 2.0 * s_norm / y_norm;
    let alpha2 = argmin_scan_parabolic(|a| squared_residual(y, s, a), 0.0, alpha_hi, 32);
    (alpha1, alpha2)
}

/// Outcome of scanning an iterate sequence for a nondegenerate cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    /// Smallest period found, if any.
    pub period: Option<usize>,
    /// Largest `|x_{k+p} - x_k|` over the examined window for the reported
    /// period; for a rejected scan, the best deviation that was seen.
    pub max_deviation: f64,
    /// Index range `[start, end)` of the examined window.
    pub window: (usize, usize),
}

/// Looks for the smallest period `p <= max_period` such that
/// `|x_{k+p} - x_k| <= tol` over the trailing two-thirds of the sequence.
///
/// A converged (eventually constant) sequence matches that test for every
/// shift, so a candidate period is only reported when the iterates actually
/// move within the period: `max_j |x_k - x_{k+j}| > 10 * tol` somewhere in
/// the window.
pub fn detect_cycle(
    iterates: &[Vec<f64>],
    max_period: usize,
    tol: f64,
) -> Result<CycleReport, OracleError> {
    let need = 3 * max_period.max(1);
    if iterates.len() < need {
        return Err(OracleError::WindowTooShort {
            have: iterates.len(),
            need,
        });
    }
    let start = iterates.len() / 3;
    let end = iterates.len();
    let mut best_dev = f64::INFINITY;
    for p in 1..=max_period {
        let mut dev = 0.0_f64;
        for k in start..end - p {
            let d: f64 = iterates[k]
                .iter()
                .zip(&iterates[k + p])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dev = dev.max(d);
        }
        best_dev = best_dev.min(dev);
        if dev <= tol {
            let mut spread = 0.0_f64;
            for k in start..end - p {
                for j in 1..=p {
                    if k + j >= end {
                        break;
                    }
                    let d: f64 = iterates[k]
                        .iter()
                        .zip(&iterates[k + j])
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    spread = spread.max(d);
                }
            }
            if spread > 10.0 * tol {
                return Ok(CycleReport {
                    period: Some(p),
                    max_deviation: dev,
                    window: (start, end),
                });
            }
        }
    }
    Ok(CycleReport {
        period: None,
        max_deviation: best_dev,
        window: (start, end),
    })
}

/// A fitted geometric envelope `v_k <= gamma * c^k` over a positive sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RLinearFit {
    /// Envelope scale; scaling the sequence by `t` scales `gamma` by `t`.
    pub gamma: f64,
    /// Fitted ratio `exp(slope)` of the least-squares line through
    /// `log v_k`; a rate certificate only when below one.
    pub c: f64,
    /// Largest amount by which a value exceeds the least-squares line, i.e.
    /// the lift applied to make the envelope dominate, in decades (decimal
    /// log units, matching how semilog convergence plots are read).
    pub residual: f64,
}

impl RLinearFit {
    /// Whether the fitted ratio certifies R-linear decrease.
    pub fn is_rlinear(&self) -> bool {
        self.c < 1.0 - 1e-6
    }
}

/// Fits `log v_k = log A + k log c` by least squares, then lifts the line so
/// it dominates every point. The input is truncated at the first exact zero;
/// at least 10 positive values must remain. The envelope is evaluated with
/// `k` counted from the start of the (truncated) slice.
pub fn fit_rlinear_envelope(values: &[f64]) -> Result<RLinearFit, OracleError> {
    let cut = values.iter().position(|&v| v == 0.0).unwrap_or(values.len());
    let values = &values[..cut];
    if values.len() < 10 {
        return Err(OracleError::SequenceTooShort {
            have: values.len(),
            need: 10,
        });
    }
    let mut logs = Vec::with_capacity(values.len());
    for &v in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(OracleError::NonPositiveValue(v));
        }
        logs.push(v.ln());
    }
    let n = logs.len() as f64;
    let k_mean = (logs.len() as f64 - 1.0) / 2.0;
    let l_mean = logs.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (k, &l) in logs.iter().enumerate() {
        let dk = k as f64 - k_mean;
        cov += dk * (l - l_mean);
        var += dk * dk;
    }
    let slope = cov / var;
    let intercept = l_mean - slope * k_mean;
    let lift = logs
        .iter()
        .enumerate()
        .map(|(k, &l)| l - (intercept + slope * k as f64))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    Ok(RLinearFit {
        gamma: (intercept + lift).exp(),
        c: slope.exp(),
        residual: lift / std::f64::consts::LN_10,
    })
}

/// Wrapper counting evaluations and optionally recording every gradient
/// evaluation point, in call order. Gradient points are exactly the iterate
/// sequence of a solver run, since the solver evaluates the gradient once
/// per point it visits.
pub struct RecordingProblem<'a, P: ?Sized> {
    inner: &'a P,
    record: bool,
    gradient_points: Mutex<Vec<Vec<f64>>>,
    value_calls: AtomicUsize,
    gradient_calls: AtomicUsize,
}

impl<'a, P: Problem + ?Sized> RecordingProblem<'a, P> {
    pub fn new(inner: &'a P) -> Self {
        Self {
            inner,
            record: true,
            gradient_points: Mutex::new(Vec::new()),
            value_calls: AtomicUsize::new(0),
            gradient_calls: AtomicUsize::new(0),
        }
    }

    /// Counts calls without storing points.
    pub fn counting_only(inner: &'a P) -> Self {
        let mut r = Self::new(inner);
        r.record = false;
        r
    }

    pub fn value_calls(&self) -> usize {
        self.value_calls.load(Ordering::Relaxed)
    }

    pub fn gradient_calls(&self) -> usize {
        self.gradient_calls.load(Ordering::Relaxed)
    }

    /// Every point passed to `gradient`, in call order.
    pub fn gradient_points(&self) -> Vec<Vec<f64>> {
        self.gradient_points.lock().unwrap().clone()
    }
}

impl<P: Problem + ?Sized> Problem for RecordingProblem<'_, P> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.value_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_calls.fetch_add(1, Ordering::Relaxed);
        if self.record {
            self.gradient_points.lock().unwrap().push(x.to_vec());
        }
        self.inner.gradient(x)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.inner.minimizer()
    }
    fn spectral_bounds(&self) -> Option<SpectralBounds> {
        self.inner.spectral_bounds()
    }
}
