//! The spectral stepsize formulas and their stabilized combination.
//!
//! Both BB stepsizes come from fitting a scalar matrix to the secant pair
//! `(s, y) = (x_k - x_{k-1}, g_k - g_{k-1})` in the least-squares sense:
//! `bb1 = s.s / s.y` and `bb2 = s.y / y.y`. The stabilized method takes the
//! minimum of the chosen BB value and the cap `delta / |g|`, which keeps the
//! distance between successive iterates at or below `delta`.

use thiserror::Error;

use crate::core::{dot, norm, StepsizeRule};

/// Errors signalling unusable stepsize inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepsizeError {
    #[error("step pair requires equal-length vectors, got {s_len} and {y_len}")]
    MismatchedLengths { s_len: usize, y_len: usize },
    #[error("degenerate pair: y = 0, no curvature information available")]
    DegeneratePair,
    #[error("stabilized stepsize requires g != 0")]
    ZeroGradient,
    #[error("stabilization radius must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("adaptive delta requires three positive finite step norms, got {0}")]
    InvalidStepNorm(f64),
    #[error("adaptive delta scaling must be positive and finite, got {0}")]
    InvalidScaling(f64),
}

/// A displacement/gradient-difference pair from two consecutive iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPair {
    s: Vec<f64>,
    y: Vec<f64>,
}

impl StepPair {
    pub fn new(s: Vec<f64>, y: Vec<f64>) -> Result<Self, StepsizeError> {
        if s.len() != y.len() {
            return Err(StepsizeError::MismatchedLengths {
                s_len: s.len(),
                y_len: y.len(),
            });
        }
        Ok(Self { s, y })
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.s, self.y)
    }
}

/// Which formula produced the accepted stepsize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepBranch {
    /// Plain BB value.
    BBRaw,
    /// Nonpositive curvature replaced by `|s|/|y|`.
    BBSafeguarded,
    /// The cap `delta/|g|` was strictly smaller than the BB value.
    StabCap,
    /// The initial step that generates the second starting point.
    Bootstrap,
}

impl std::fmt::Display for StepBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            StepBranch::BBRaw => "BBRaw",
            StepBranch::BBSafeguarded => "BBSafeguarded",
            StepBranch::StabCap => "StabCap",
            StepBranch::Bootstrap => "Bootstrap",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for StepBranch {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BBRaw" => Ok(StepBranch::BBRaw),
            "BBSafeguarded" => Ok(StepBranch::BBSafeguarded),
            "StabCap" => Ok(StepBranch::StabCap),
            "Bootstrap" => Ok(StepBranch::Bootstrap),
            other => Err(format!("unknown step branch `{other}`")),
        }
    }
}

/// An accepted stepsize together with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeOutcome {
    pub alpha: f64,
    pub branch: StepBranch,
}

/// First BB stepsize `s.s / s.y`.
///
/// Returns `None` when the curvature `s.y` is nonpositive (or NaN), or when
/// the quotient is not a positive finite number; the caller decides between
/// the safeguard and the raw quotient.
pub fn bb1(pair: &StepPair) -> Option<f64> {
    let sty = dot(pair.s(), pair.y());
    if !(sty > 0.0) {
        return None;
    }
    let alpha = dot(pair.s(), pair.s()) / sty;
    (alpha.is_finite() && alpha > 0.0).then_some(alpha)
}

/// Second BB stepsize `s.y / y.y`.
pub fn bb2(pair: &StepPair) -> Option<f64> {
    let sty = dot(pair.s(), pair.y());
    if !(sty > 0.0) {
        return None;
    }
    let yty = dot(pair.y(), pair.y());
    if yty == 0.0 {
        return None;
    }
    let alpha = sty / yty;
    (alpha.is_finite() && alpha > 0.0).then_some(alpha)
}

/// The unguarded BB quotient for `rule`, sign and all. May be nonpositive or
/// non-finite; used when the nonconvexity safeguard is switched off so that
/// the iteration matches the textbook method exactly.
pub fn bb_raw(pair: &StepPair, rule: StepsizeRule) -> f64 {
    let sty = dot(pair.s(), pair.y());
    match rule {
        StepsizeRule::BB1 => dot(pair.s(), pair.s()) / sty,
        StepsizeRule::BB2 => sty / dot(pair.y(), pair.y()),
    }
}

/// BB stepsize with the nonpositive-curvature safeguard: when the raw value
/// is unusable, `|s|/|y|` is substituted. The substitution is applied for
/// `s.y <= 0`, not only `< 0`, because a vanishing curvature makes bb1
/// infinite and bb2 zero.
///
/// Fails only for `y = 0`, where no safeguard value exists either; the
/// solver then falls back to the stabilization cap.
pub fn safeguarded_bb(
    pair: &StepPair,
    rule: StepsizeRule,
) -> Result<StepsizeOutcome, StepsizeError> {
    let raw = match rule {
        StepsizeRule::BB1 => bb1(pair),
        StepsizeRule::BB2 => bb2(pair),
    };
    if let Some(alpha) = raw {
        return Ok(StepsizeOutcome {
            alpha,
            branch: StepBranch::BBRaw,
        });
    }
    let y_norm = norm(pair.y());
    if y_norm == 0.0 {
        return Err(StepsizeError::DegeneratePair);
    }
    Ok(StepsizeOutcome {
        alpha: norm(pair.s()) / y_norm,
        branch: StepBranch::BBSafeguarded,
    })
}

/// The capping stepsize `delta / |g|`, which makes the next step length
/// exactly `delta` when it is selected. `delta = +inf` returns `+inf`,
/// the no-cap sentinel.
pub fn stab_stepsize(delta: f64, g: &[f64]) -> Result<f64, StepsizeError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(StepsizeError::InvalidDelta(delta));
    }
    let g_norm = norm(g);
    if g_norm == 0.0 {
        return Err(StepsizeError::ZeroGradient);
    }
    Ok(delta / g_norm)
}

/// Minimum of the BB value and the cap. A tie is reported as the BB branch:
/// the tag is diagnostic only, and on ties the step is the BB step anyway.
pub fn combined_stepsize(alpha_bb: f64, alpha_stab: f64) -> StepsizeOutcome {
    debug_assert!(alpha_bb > 0.0 && alpha_stab > 0.0);
    if alpha_stab < alpha_bb {
        StepsizeOutcome {
            alpha: alpha_stab,
            branch: StepBranch::StabCap,
        }
    } else {
        StepsizeOutcome {
            alpha: alpha_bb,
            branch: StepBranch::BBRaw,
        }
    }
}

/// Adaptive radius `c * min{|s_1|, |s_2|, |s_3|}` from the first three
/// uncapped step lengths. Rejects zero or non-finite norms; the solver keeps
/// the run uncapped in that case.
pub fn adaptive_delta(step_norms: [f64; 3], c: f64) -> Result<f64, StepsizeError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(StepsizeError::InvalidScaling(c));
    }
    for &n in &step_norms {
        if !(n > 0.0 && n.is_finite()) {
            return Err(StepsizeError::InvalidStepNorm(n));
        }
    }
    let min = step_norms.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(c * min)
}
