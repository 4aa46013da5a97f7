//! Experiment front-end shared by the CLI and the examples: problem and
//! start-point selectors, experiment specs in a flat key-value format,
//! per-iteration CSV traces, summary tables, performance profiles, and the
//! oracle-backed verification suite.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::core::{
    inf_norm, norm, DeltaPolicy, Problem, Region, SolverConfig, StepsizeRule,
};
use crate::oracles::{detect_cycle, CycleReport};
use crate::solver::{run, run_from_pair, SolveError, SolveResult, TraceRecord};
use crate::stepsize::StepBranch;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem selector `{0}`")]
    UnknownProblem(String),
    #[error("invalid selector `{selector}`: {reason}")]
    InvalidSelector { selector: String, reason: String },
    #[error("experiment spec line {line}: {reason}")]
    SpecParse { line: usize, reason: String },
    #[error("experiment spec needs at least one `solver =` line")]
    NoSolvers,
    #[error("performance profile needs a nonempty problem set")]
    EmptyProblemSet,
    #[error("solver `{solver}` is missing results for problem `{problem}`")]
    InconsistentResults { solver: String, problem: String },
    #[error("tau grid values must be >= 1, got {0}")]
    InvalidTau(f64),
    #[error("trace csv line {line}: {reason}")]
    TraceParse { line: usize, reason: String },
    #[error("summary csv line {line}: {reason}")]
    SummaryParse { line: usize, reason: String },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which objective an experiment runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSelector {
    /// Univariate for n = 1, the separable extension otherwise.
    Counterexample { n: usize },
    Raydan { n: usize },
    Rosenbrock { n: usize },
    Diagonal { eigenvalues: Vec<f64> },
    MatrixFile(PathBuf),
}

impl FromStr for ProblemSelector {
    type Err = HarnessError;

    /// Grammar: `counterexample[:n=K]`, `raydan:n=K`, `rosenbrock:n=K`,
    /// `diag:a,b,c`, `diag:lo..hi` (integer eigenvalues), `matrix:path`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| HarnessError::InvalidSelector {
            selector: s.to_string(),
            reason: reason.to_string(),
        };
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        match name {
            "counterexample" => {
                let n = match rest {
                    None => 1,
                    Some(r) => parse_dim(r).ok_or_else(|| bad("expected n=<positive int>"))?,
                };
                Ok(ProblemSelector::Counterexample { n })
            }
            "raydan" => {
                let n = parse_dim(rest.ok_or_else(|| bad("expected n=<positive int>"))?)
                    .ok_or_else(|| bad("expected n=<positive int>"))?;
                Ok(ProblemSelector::Raydan { n })
            }
            "rosenbrock" => {
                let n = parse_dim(rest.ok_or_else(|| bad("expected n=<positive int>"))?)
                    .ok_or_else(|| bad("expected n=<positive int>"))?;
                Ok(ProblemSelector::Rosenbrock { n })
            }
            "diag" => {
                let r = rest.ok_or_else(|| bad("expected eigenvalue list or lo..hi"))?;
                let eigenvalues = if let Some((lo, hi)) = r.split_once("..") {
                    let lo: i64 = lo.trim().parse().map_err(|_| bad("bad range"))?;
                    let hi: i64 = hi.trim().parse().map_err(|_| bad("bad range"))?;
                    if lo > hi {
                        return Err(bad("empty range"));
                    }
                    (lo..=hi).map(|v| v as f64).collect()
                } else {
                    r.split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<Result<Vec<f64>, _>>()
                        .map_err(|_| bad("bad eigenvalue list"))?
                };
                Ok(ProblemSelector::Diagonal { eigenvalues })
            }
            "matrix" => Ok(ProblemSelector::MatrixFile(PathBuf::from(
                rest.ok_or_else(|| bad("expected a path"))?,
            ))),
            _ => Err(HarnessError::UnknownProblem(s.to_string())),
        }
    }
}

fn parse_dim(s: &str) -> Option<usize> {
    let v = s.strip_prefix("n=")?.parse().ok()?;
    (v > 0).then_some(v)
}

/// How a start vector is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    Zero,
    Const(f64),
    Explicit(Vec<f64>),
    File(PathBuf),
}

impl FromStr for StartSpec {
    type Err = HarnessError;

    /// Grammar: `zero`, `const:<v>`, `vec:a,b,c`, `file:<path>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| HarnessError::InvalidSelector {
            selector: s.to_string(),
            reason: reason.to_string(),
        };
        if s == "zero" {
            return Ok(StartSpec::Zero);
        }
        if let Some(v) = s.strip_prefix("const:") {
            return Ok(StartSpec::Const(v.parse().map_err(|_| bad("bad constant"))?));
        }
        if let Some(list) = s.strip_prefix("vec:") {
            let v = list
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| bad("bad vector literal"))?;
            return Ok(StartSpec::Explicit(v));
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(StartSpec::File(PathBuf::from(p)));
        }
        Err(bad("expected zero | const:<v> | vec:... | file:<path>"))
    }
}

impl StartSpec {
    fn materialize(&self, n: usize) -> Result<Vec<f64>, HarnessError> {
        match self {
            StartSpec::Zero => Ok(vec![0.0; n]),
            StartSpec::Const(v) => Ok(vec![*v; n]),
            StartSpec::Explicit(v) => Ok(v.clone()),
            StartSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let v = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|e| HarnessError::InvalidSelector {
                        selector: format!("file:{}", path.display()),
                        reason: e.to_string(),
                    })?;
                Ok(v)
            }
        }
    }
}

/// One solver column of an experiment: a label for tables plus its config.
#[derive(Debug, Clone)]
pub struct SolverSpec {
    pub label: String,
    pub config: SolverConfig,
}

impl SolverSpec {
    /// Parses `bb1|bb2 [delta=inf|<float>|auto:<c>] [safeguard=on|off]` and
    /// derives a stable label: plain rules keep their name, capped ones get
    /// a `stab` suffix with the radius or scaling appended.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let bad = |reason: &str| HarnessError::InvalidSelector {
            selector: text.to_string(),
            reason: reason.to_string(),
        };
        let mut rule = None;
        let mut delta = DeltaPolicy::Infinite;
        let mut safeguard = true;
        for token in text.split_whitespace() {
            match token {
                "bb1" => rule = Some(StepsizeRule::BB1),
                "bb2" => rule = Some(StepsizeRule::BB2),
                _ => {
                    if let Some(d) = token.strip_prefix("delta=") {
                        delta = parse_delta(d).ok_or_else(|| bad("bad delta"))?;
                    } else if let Some(sg) = token.strip_prefix("safeguard=") {
                        safeguard = match sg {
                            "on" => true,
                            "off" => false,
                            _ => return Err(bad("safeguard must be on or off")),
                        };
                    } else {
                        return Err(bad("unrecognized token"));
                    }
                }
            }
        }
        let rule = rule.ok_or_else(|| bad("missing rule (bb1 or bb2)"))?;
        let config = SolverConfig::new(rule, delta).with_safeguard(safeguard);
        Ok(SolverSpec {
            label: derive_label(&config),
            config,
        })
    }
}

/// `inf`, a float, or `auto:<c>`.
pub fn parse_delta(text: &str) -> Option<DeltaPolicy> {
    if text == "inf" {
        return Some(DeltaPolicy::Infinite);
    }
    if let Some(c) = text.strip_prefix("auto:") {
        let c: f64 = c.parse().ok()?;
        return (c > 0.0 && c.is_finite()).then_some(DeltaPolicy::Adaptive(c));
    }
    let d: f64 = text.parse().ok()?;
    (d > 0.0 && d.is_finite()).then_some(DeltaPolicy::Fixed(d))
}

fn derive_label(config: &SolverConfig) -> String {
    match config.delta {
        DeltaPolicy::Infinite => config.rule.to_string(),
        DeltaPolicy::Fixed(d) => format!("{}stab_d{}", config.rule, trim_float(d)),
        DeltaPolicy::Adaptive(c) => format!("{}stab_c{}", config.rule, trim_float(c)),
    }
}

fn trim_float(v: f64) -> String {
    let s = format!("{v}");
    s.replace('.', "p")
}

/// A full experiment: one problem and start, several solver configs.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub problem: ProblemSelector,
    pub x0: StartSpec,
    /// Optional explicit second start point; quadratics otherwise derive it
    /// from a scaled gradient step and general problems bootstrap it.
    pub x1: Option<StartSpec>,
    pub solvers: Vec<SolverSpec>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub max_iterations: usize,
    pub rel_tol: f64,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemSelector, x0: StartSpec) -> Self {
        Self {
            problem,
            x0,
            x1: None,
            solvers: Vec::new(),
            out_dir: None,
            seed: 0,
            max_iterations: 100_000,
            rel_tol: 1e-6,
        }
    }

    /// Parses the flat `key = value` format. Keys: `problem`, `x0`, `x1`,
    /// `out`, `seed`, `maxit`, `tol`, and one `solver` line per config.
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut problem = None;
        let mut x0 = None;
        let mut x1 = None;
        let mut out_dir = None;
        let mut seed = 0u64;
        let mut max_iterations = 100_000usize;
        let mut rel_tol = 1e-6f64;
        let mut solvers = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(HarnessError::SpecParse {
                line: line_no,
                reason: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let parse_err = |reason: String| HarnessError::SpecParse {
                line: line_no,
                reason,
            };
            match key {
                "problem" => problem = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?),
                "x0" => x0 = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?),
                "x1" => x1 = Some(value.parse().map_err(|e| parse_err(format!("{e}")))?),
                "out" => out_dir = Some(PathBuf::from(value)),
                "seed" => seed = value.parse().map_err(|_| parse_err("bad seed".into()))?,
                "maxit" => {
                    max_iterations = value.parse().map_err(|_| parse_err("bad maxit".into()))?
                }
                "tol" => rel_tol = value.parse().map_err(|_| parse_err("bad tol".into()))?,
                "solver" => {
                    solvers.push(SolverSpec::parse(value).map_err(|e| parse_err(format!("{e}")))?)
                }
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        let problem = problem.ok_or(HarnessError::SpecParse {
            line: 0,
            reason: "missing `problem =` line".into(),
        })?;
        let x0 = x0.ok_or(HarnessError::SpecParse {
            line: 0,
            reason: "missing `x0 =` line".into(),
        })?;
        if solvers.is_empty() {
            return Err(HarnessError::NoSolvers);
        }
        let mut spec = ExperimentSpec::new(problem, x0);
        spec.x1 = x1;
        spec.solvers = solvers;
        spec.out_dir = out_dir;
        spec.seed = seed;
        spec.max_iterations = max_iterations;
        spec.rel_tol = rel_tol;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// One solver's outcome within an experiment.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub problem_name: String,
    pub n: usize,
    pub result: SolveResult,
    /// Populated for small non-converged runs, where a nondegenerate cycle
    /// is a plausible explanation worth surfacing.
    pub cycle: Option<CycleReport>,
}

struct BuiltProblem {
    problem: Box<dyn Problem>,
    name: String,
    /// Quadratics skip the descent bootstrap and start from a plain scaled
    /// gradient step.
    quadratic: bool,
}

fn build_problem(selector: &ProblemSelector) -> Result<BuiltProblem, HarnessError> {
    use crate::problems;
    let wrap = |e: problems::ProblemError, sel: &ProblemSelector| HarnessError::InvalidSelector {
        selector: format!("{sel:?}"),
        reason: e.to_string(),
    };
    Ok(match selector {
        ProblemSelector::Counterexample { n } => BuiltProblem {
            problem: if *n == 1 {
                Box::new(problems::Counterexample)
            } else {
                Box::new(
                    problems::SeparableCounterexample::new(*n).map_err(|e| wrap(e, selector))?,
                )
            },
            name: format!("counterexample_n{n}"),
            quadratic: false,
        },
        ProblemSelector::Raydan { n } => BuiltProblem {
            problem: Box::new(problems::Raydan::new(*n).map_err(|e| wrap(e, selector))?),
            name: format!("raydan_n{n}"),
            quadratic: false,
        },
        ProblemSelector::Rosenbrock { n } => BuiltProblem {
            problem: Box::new(
                problems::ExtendedRosenbrock::new(*n).map_err(|e| wrap(e, selector))?,
            ),
            name: format!("rosenbrock_n{n}"),
            quadratic: false,
        },
        ProblemSelector::Diagonal { eigenvalues } => BuiltProblem {
            problem: Box::new(
                problems::diagonal_quadratic(eigenvalues).map_err(|e| wrap(e, selector))?,
            ),
            name: format!("diag_n{}", eigenvalues.len()),
            quadratic: true,
        },
        ProblemSelector::MatrixFile(path) => {
            let matrix = crate::quadratic_io::parse_matrix_market_file(path)?;
            let mut quad = crate::quadratic_io::build_quadratic(matrix);
            // Bounds power the region diagnostics; estimation failure only
            // disables them.
            if let Ok(bounds) =
                crate::quadratic_io::estimate_spectral_bounds(quad.matrix(), 50_000, 1e-10)
            {
                quad = quad.with_bounds(bounds);
            }
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "matrix".into());
            BuiltProblem {
                problem: Box::new(quad),
                name,
                quadratic: true,
            }
        }
    })
}

/// Runs every solver of the spec on its problem. When `out` is set, a trace
/// CSV per solver and one summary table are written there. Failed statuses
/// (iteration limit, non-finite) are results, not errors.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunReport>, HarnessError> {
    let built = build_problem(&spec.problem)?;
    let n = built.problem.dimension();
    let x0 = spec.x0.materialize(n)?;
    let x1 = match &spec.x1 {
        Some(s) => Some(s.materialize(n)?),
        None => None,
    };

    let mut reports = Vec::new();
    for solver in &spec.solvers {
        let mut config = solver.config.clone();
        config.max_iterations = spec.max_iterations;
        config.rel_tol = spec.rel_tol;

        // Record iterates only when the memory cost stays small.
        let record_iterates = n * (spec.max_iterations + 2) <= 2_000_000;
        let recorder = crate::oracles::RecordingProblem::new(built.problem.as_ref());

        let result = if record_iterates {
            dispatch(&recorder, &x0, x1.as_deref(), built.quadratic, &config)?
        } else {
            dispatch(built.problem.as_ref(), &x0, x1.as_deref(), built.quadratic, &config)?
        };

        let cycle = if record_iterates && !result.status.is_success() {
            let points = recorder.gradient_points();
            detect_cycle(&points, 8, 1e-8).ok()
        } else {
            None
        };

        reports.push(RunReport {
            label: solver.label.clone(),
            problem_name: built.name.clone(),
            n,
            result,
            cycle,
        });
    }

    if let Some(dir) = &spec.out_dir {
        std::fs::create_dir_all(dir)?;
        for report in &reports {
            write_trace_csv(&report.result, &dir.join(format!("trace_{}.csv", report.label)))?;
        }
        std::fs::write(dir.join("summary.csv"), summary_csv(&reports))?;
    }
    Ok(reports)
}

fn dispatch<P: Problem + ?Sized>(
    problem: &P,
    x0: &[f64],
    x1: Option<&[f64]>,
    quadratic: bool,
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    if let Some(x1) = x1 {
        return run_from_pair(problem, x0, x1, config);
    }
    if quadratic {
        // x1 = x0 - g0 / |g0|_inf, no descent test needed on a quadratic.
        let g0 = problem.gradient(x0);
        let scale = inf_norm(&g0);
        if scale == 0.0 || !scale.is_finite() {
            // run() classifies the degenerate start without bootstrapping.
            return run(problem, x0, config);
        }
        let x1: Vec<f64> = x0.iter().zip(&g0).map(|(&xi, &gi)| xi - gi / scale).collect();
        return run_from_pair(problem, x0, &x1, config);
    }
    run(problem, x0, config)
}

fn fmt_f64(v: f64) -> String {
    // 17 significant digits: round-trip exact for f64.
    format!("{v:.16e}")
}

/// Writes the per-iteration trace with the schema
/// `k,g_norm,s_norm,alpha,branch,region,q_k`; absent optionals are empty.
pub fn write_trace_csv(result: &SolveResult, path: &Path) -> Result<(), std::io::Error> {
    std::fs::write(path, trace_csv(result))
}

pub fn trace_csv(result: &SolveResult) -> String {
    let mut out = String::from("k,g_norm,s_norm,alpha,branch,region,q_k\n");
    for r in &result.trace {
        let region = r.region.map(|x| x.to_string()).unwrap_or_default();
        let q = r.q_k.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.g_norm),
            fmt_f64(r.s_norm),
            fmt_f64(r.alpha),
            r.branch,
            region,
            q
        );
    }
    out
}

/// Parses a trace CSV back into records; the writer uses 17 significant
/// digits, so this inverts it exactly.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            continue; // header
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(HarnessError::TraceParse {
                line: line_no,
                reason: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let err = |reason: String| HarnessError::TraceParse {
            line: line_no,
            reason,
        };
        records.push(TraceRecord {
            k: fields[0].parse().map_err(|_| err("bad k".into()))?,
            g_norm: fields[1].parse().map_err(|_| err("bad g_norm".into()))?,
            s_norm: fields[2].parse().map_err(|_| err("bad s_norm".into()))?,
            alpha: fields[3].parse().map_err(|_| err("bad alpha".into()))?,
            branch: StepBranch::from_str(fields[4]).map_err(err)?,
            region: if fields[5].is_empty() {
                None
            } else {
                Some(Region::from_str(fields[5]).map_err(err)?)
            },
            q_k: if fields[6].is_empty() {
                None
            } else {
                Some(fields[6].parse().map_err(|_| err("bad q_k".into()))?)
            },
        });
    }
    Ok(records)
}

/// Summary table with the schema
/// `problem,n,solver,status,iterations,final_gnorm,delta,stab_steps,last_stab_iter`.
pub fn summary_csv(reports: &[RunReport]) -> String {
    let mut out =
        String::from("problem,n,solver,status,iterations,final_gnorm,delta,stab_steps,last_stab_iter\n");
    for r in reports {
        let delta = if r.result.delta_used.is_finite() {
            fmt_f64(r.result.delta_used)
        } else {
            "inf".to_string()
        };
        let last_stab = r
            .result
            .last_stab_iteration
            .map(|k| k.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.problem_name,
            r.n,
            r.label,
            r.result.status,
            r.result.iterations,
            fmt_f64(r.result.final_g_norm),
            delta,
            r.result.stab_step_count,
            last_stab
        );
    }
    out
}

/// One solver's cumulative curve over the iteration-ratio grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub label: String,
    /// `(tau, fraction)` points; fraction is nondecreasing in tau and
    /// bounded by the solver's success rate.
    pub points: Vec<(f64, f64)>,
}

/// Performance profile over `solver -> problem -> (solved, iterations)`:
/// per problem, each solver's iteration count is divided by the best count
/// among the solvers that solved it; the curve value at `tau` is the
/// fraction of problems with ratio at most `tau`. Unsolved problems get an
/// infinite ratio.
pub fn performance_profile(
    results: &BTreeMap<String, BTreeMap<String, (bool, usize)>>,
    taus: &[f64],
) -> Result<Vec<ProfileCurve>, HarnessError> {
    let mut problems: Vec<&String> = match results.values().next() {
        Some(first) => first.keys().collect(),
        None => return Err(HarnessError::EmptyProblemSet),
    };
    problems.sort();
    if problems.is_empty() {
        return Err(HarnessError::EmptyProblemSet);
    }
    for tau in taus {
        if !(*tau >= 1.0) {
            return Err(HarnessError::InvalidTau(*tau));
        }
    }
    for (solver, per_problem) in results {
        for p in &problems {
            if !per_problem.contains_key(*p) {
                return Err(HarnessError::InconsistentResults {
                    solver: solver.clone(),
                    problem: (*p).clone(),
                });
            }
        }
        if per_problem.len() != problems.len() {
            let extra = per_problem
                .keys()
                .find(|k| !problems.contains(k))
                .cloned()
                .unwrap_or_default();
            return Err(HarnessError::InconsistentResults {
                solver: solver.clone(),
                problem: extra,
            });
        }
    }

    let mut ratios: BTreeMap<&String, Vec<f64>> = BTreeMap::new();
    for p in &problems {
        let best = results
            .values()
            .filter_map(|per| {
                let &(solved, its) = per.get(*p).unwrap();
                solved.then_some(its)
            })
            .min();
        for (solver, per) in results {
            let &(solved, its) = per.get(*p).unwrap();
            let ratio = match (solved, best) {
                (true, Some(best)) => its as f64 / best.max(1) as f64,
                _ => f64::INFINITY,
            };
            ratios.entry(solver).or_default().push(ratio);
        }
    }

    let total = problems.len() as f64;
    Ok(ratios
        .into_iter()
        .map(|(solver, rs)| ProfileCurve {
            label: solver.clone(),
            points: taus
                .iter()
                .map(|&tau| {
                    let count = rs.iter().filter(|&&r| r <= tau).count();
                    (tau, count as f64 / total)
                })
                .collect(),
        })
        .collect())
}

/// Geometric default grid for profiles: 1 to 1024.
pub fn default_tau_grid() -> Vec<f64> {
    let mut taus = Vec::with_capacity(61);
    let mut tau = 1.0;
    for _ in 0..61 {
        taus.push(tau);
        tau *= 2.0_f64.powf(1.0 / 6.0);
    }
    taus
}

pub fn profile_csv(curves: &[ProfileCurve]) -> String {
    let mut out = String::from("solver,tau,fraction\n");
    for c in curves {
        for &(tau, fraction) in &c.points {
            let _ = writeln!(out, "{},{},{}", c.label, fmt_f64(tau), fmt_f64(fraction));
        }
    }
    out
}

/// Reads one or more summary CSVs into profile input, treating `Converged`
/// and `ZeroGradient` statuses as solved.
pub fn profile_input_from_summaries(
    paths: &[PathBuf],
) -> Result<BTreeMap<String, BTreeMap<String, (bool, usize)>>, HarnessError> {
    let mut results: BTreeMap<String, BTreeMap<String, (bool, usize)>> = BTreeMap::new();
    for path in paths {
        let text = std::fs::read_to_string(path)?;
        for (idx, line) in text.lines().enumerate() {
            if idx == 0 || line.is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(HarnessError::SummaryParse {
                    line: line_no,
                    reason: format!("expected 9 fields, got {}", fields.len()),
                });
            }
            let problem = fields[0].to_string();
            let solver = fields[2].to_string();
            let solved = matches!(fields[3], "Converged" | "ZeroGradient");
            let iterations = fields[4].parse().map_err(|_| HarnessError::SummaryParse {
                line: line_no,
                reason: "bad iteration count".into(),
            })?;
            results
                .entry(solver)
                .or_default()
                .insert(problem, (solved, iterations));
        }
    }
    Ok(results)
}

/// One line of the verification report.
#[derive(Debug, Clone)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Worst measured violation, in the units of `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    fn push(&mut self, name: &str, measured: f64, tolerance: f64, detail: String) {
        self.entries.push(CheckEntry {
            name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail,
        });
    }

    fn push_bool(&mut self, name: &str, passed: bool, detail: String) {
        self.entries.push(CheckEntry {
            name: name.to_string(),
            passed,
            measured: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail,
        });
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{} {:<40} measured={:<12.4e} tol={:<9.1e} {}",
                if e.passed { "PASS" } else { "FAIL" },
                e.name,
                e.measured,
                e.tolerance,
                e.detail
            )?;
        }
        Ok(())
    }
}

/// Runs the oracle suite. `selector` filters by prefix: `gradients`,
/// `stepsize`, `cycle`, `bounds`, `contraction`, `envelope`, or `all`.
pub fn check(selector: &str, seed: u64) -> CheckReport {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use crate::oracles::{fd_gradient_check, fit_rlinear_envelope, stepsize_oracle, RecordingProblem};
    use crate::problems::{
        diagonal_quadratic, Counterexample, CounterexampleConstants, ExtendedRosenbrock, Raydan,
        SeparableCounterexample,
    };
    use crate::stepsize::{bb1, bb2, StepPair};

    let mut report = CheckReport::default();
    let wants = |name: &str| selector == "all" || name.starts_with(selector);
    let mut rng = StdRng::seed_from_u64(seed);

    if wants("gradients") {
        let ce = Counterexample;
        let sep = SeparableCounterexample::new(6).unwrap();
        let ray = Raydan::new(12).unwrap();
        let ros = ExtendedRosenbrock::new(8).unwrap();
        let diag = diagonal_quadratic(&[1.0, 3.0, 17.0]).unwrap();
        let named: Vec<(&str, &dyn Problem)> = vec![
            ("counterexample", &ce),
            ("separable", &sep),
            ("raydan", &ray),
            ("rosenbrock", &ros),
            ("diag", &diag),
        ];
        for (name, problem) in named {
            let mut worst = 0.0_f64;
            for _ in 0..20 {
                let x: Vec<f64> = (0..problem.dimension())
                    .map(|_| rng.gen_range(-3.0..3.0))
                    .collect();
                match fd_gradient_check(problem, &x, 1e-6) {
                    Ok(err) => worst = worst.max(err),
                    Err(_) => worst = f64::INFINITY,
                }
            }
            report.push(
                &format!("gradients/{name}"),
                worst,
                1e-6,
                "max relative deviation from central differences".into(),
            );
            if let Some(xstar) = problem.minimizer() {
                let gn = norm(&problem.gradient(&xstar));
                report.push(
                    &format!("gradients/{name}_minimizer"),
                    gn,
                    1e-12 * norm(&xstar).max(1.0),
                    "gradient norm at the declared minimizer".into(),
                );
            }
        }
    }

    if wants("stepsize") {
        let mut worst = 0.0_f64;
        let mut worst_order = 0.0_f64;
        let mut used = 0;
        while used < 1000 {
            let n = rng.gen_range(1..9);
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let pair = StepPair::new(s, y).unwrap();
            let (Some(a1), Some(a2)) = (bb1(&pair), bb2(&pair)) else {
                continue;
            };
            let (o1, o2) = stepsize_oracle(&pair);
            worst = worst.max((o1 - a1).abs() / a1).max((o2 - a2).abs() / a2);
            worst_order = worst_order.max(a2 - a1); // positive would violate bb1 >= bb2
            used += 1;
        }
        report.push(
            "stepsize/oracle_agreement",
            worst,
            1e-6,
            "closed forms vs golden-section least squares, 1000 pairs".into(),
        );
        report.push(
            "stepsize/bb1_ge_bb2",
            worst_order.max(0.0),
            1e-12,
            "largest bb2 - bb1 excess over random pairs".into(),
        );
    }

    if wants("cycle") {
        let c = CounterexampleConstants::new();
        let rec = RecordingProblem::new(&Counterexample);
        let config = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Infinite)
            .with_max_iterations(200);
        let outcome = run_from_pair(&rec, &[-c.b], &[-c.a], &config);
        match outcome {
            Ok(result) if !result.status.is_success() => {
                let cycle = detect_cycle(&rec.gradient_points(), 8, 1e-8);
                let found = matches!(&cycle, Ok(rep) if rep.period == Some(4));
                report.push_bool(
                    "cycle/counterexample_period4",
                    found,
                    format!("{cycle:?}"),
                );
            }
            other => report.push_bool(
                "cycle/counterexample_period4",
                false,
                format!("unexpected outcome {other:?}"),
            ),
        }
    }

    if wants("bounds") {
        let eigs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let problem = diagonal_quadratic(&eigs).unwrap();
        let bounds = problem.spectral_bounds().unwrap();
        let mut worst = 0.0_f64;
        for rule in [StepsizeRule::BB1, StepsizeRule::BB2] {
            let rec = RecordingProblem::new(&problem);
            let config = SolverConfig::new(rule, DeltaPolicy::Infinite);
            let x0: Vec<f64> = (0..10).map(|_| rng.gen_range(-10.0..10.0)).collect();
            if run(&rec, &x0, &config).is_err() {
                continue;
            }
            let points = rec.gradient_points();
            for w in points.windows(2) {
                let pair = StepPair::new(
                    w[1].iter().zip(&w[0]).map(|(&a, &b)| a - b).collect(),
                    problem
                        .gradient(&w[1])
                        .iter()
                        .zip(&problem.gradient(&w[0]))
                        .map(|(&a, &b)| a - b)
                        .collect(),
                )
                .unwrap();
                for alpha in [bb1(&pair), bb2(&pair)].into_iter().flatten() {
                    worst = worst
                        .max(1.0 / bounds.lambda_hi() - alpha)
                        .max(alpha - 1.0 / bounds.lambda_lo());
                }
            }
        }
        report.push(
            "bounds/alpha_within_spectral_range",
            worst.max(0.0),
            1e-12,
            "max violation of 1/lambda_hi <= alpha_bb <= 1/lambda_lo".into(),
        );
    }

    if wants("contraction") || wants("absorption") {
        let eigs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let problem = diagonal_quadratic(&eigs).unwrap();
        let bounds = problem.spectral_bounds().unwrap();
        let x0 = vec![-50.0; 10];
        let x_star = vec![1.0; 10];
        let dist: f64 = norm(&x0.iter().zip(&x_star).map(|(&a, &b)| a - b).collect::<Vec<_>>());
        let delta = 1e-2 * dist;
        let config = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Fixed(delta));
        match run(&problem, &x0, &config) {
            Ok(result) => {
                let mut worst_contract = 0.0_f64;
                let mut absorbed_at = None;
                let mut absorption_ok = true;
                let records = &result.trace;
                for (idx, rec) in records.iter().enumerate() {
                    let next_g = records
                        .get(idx + 1)
                        .map(|r| r.g_norm)
                        .unwrap_or(result.final_g_norm);
                    match rec.region {
                        Some(r) if r.is_omega3() => {
                            let q = rec.q_k.unwrap();
                            worst_contract =
                                worst_contract.max(next_g / (q * rec.g_norm) - 1.0);
                        }
                        Some(_) => {
                            worst_contract = worst_contract
                                .max(next_g / (bounds.kappa() * rec.g_norm) - 1.0);
                        }
                        None => {}
                    }
                    let inside = matches!(
                        rec.region,
                        Some(Region::Omega1) | Some(Region::Omega2) | Some(Region::Omega3Prime)
                    );
                    if inside && absorbed_at.is_none() {
                        absorbed_at = Some(rec.k);
                    }
                    if absorbed_at.is_some() && rec.region == Some(Region::Omega3Outer) {
                        absorption_ok = false;
                    }
                }
                report.push(
                    "contraction/gradient_norm_lemma",
                    worst_contract.max(0.0),
                    1e-10,
                    "max excess over q_k |g| (outer region) and kappa |g| (inner)".into(),
                );
                report.push_bool(
                    "contraction/absorption",
                    absorption_ok && absorbed_at.is_some(),
                    format!("first absorbed iteration: {absorbed_at:?}"),
                );
            }
            Err(e) => {
                report.push_bool("contraction/gradient_norm_lemma", false, e.to_string());
            }
        }
    }

    if wants("envelope") {
        let eigs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let problem = diagonal_quadratic(&eigs).unwrap();
        let rec = RecordingProblem::new(&problem);
        let config = SolverConfig::new(StepsizeRule::BB1, DeltaPolicy::Fixed(1.0))
            .with_rel_tol(1e-10);
        match run(&rec, &[-20.0; 10], &config) {
            Ok(result) if result.status.is_success() => {
                let errors: Vec<f64> = rec
                    .gradient_points()
                    .iter()
                    .map(|x| {
                        norm(&x.iter().map(|&v| v - 1.0).collect::<Vec<_>>())
                    })
                    .collect();
                match fit_rlinear_envelope(&errors) {
                    Ok(fit) => {
                        report.push(
                            "envelope/rate_below_one",
                            fit.c,
                            0.99,
                            format!("fitted c with residual {:.3}", fit.residual),
                        );
                    }
                    Err(e) => report.push_bool("envelope/rate_below_one", false, e.to_string()),
                }
            }
            other => report.push_bool(
                "envelope/rate_below_one",
                false,
                format!("run did not converge: {other:?}"),
            ),
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Termination;

    #[test]
    fn problem_selector_grammar() {
        assert_eq!(
            "counterexample".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::Counterexample { n: 1 }
        );
        assert_eq!(
            "counterexample:n=4".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::Counterexample { n: 4 }
        );
        assert_eq!(
            "raydan:n=1000".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::Raydan { n: 1000 }
        );
        assert_eq!(
            "diag:1..4".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::Diagonal {
                eigenvalues: vec![1.0, 2.0, 3.0, 4.0]
            }
        );
        assert_eq!(
            "diag:0.5,2.5".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::Diagonal {
                eigenvalues: vec![0.5, 2.5]
            }
        );
        assert!(matches!(
            "matrix:data/x.mtx".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::MatrixFile(_)
        ));
        assert!("raydan".parse::<ProblemSelector>().is_err());
        assert!("nosuch:n=3".parse::<ProblemSelector>().is_err());
    }

    #[test]
    fn start_spec_grammar() {
        assert_eq!("zero".parse::<StartSpec>().unwrap(), StartSpec::Zero);
        assert_eq!(
            "const:-10".parse::<StartSpec>().unwrap(),
            StartSpec::Const(-10.0)
        );
        assert_eq!(
            "vec:1,2,3".parse::<StartSpec>().unwrap(),
            StartSpec::Explicit(vec![1.0, 2.0, 3.0])
        );
        assert!("bogus".parse::<StartSpec>().is_err());
    }

    #[test]
    fn solver_spec_labels() {
        let s = SolverSpec::parse("bb1").unwrap();
        assert_eq!(s.label, "bb1");
        assert_eq!(s.config.delta, DeltaPolicy::Infinite);

        let s = SolverSpec::parse("bb1 delta=2").unwrap();
        assert_eq!(s.label, "bb1stab_d2");
        assert_eq!(s.config.delta, DeltaPolicy::Fixed(2.0));

        let s = SolverSpec::parse("bb2 delta=auto:0.25 safeguard=off").unwrap();
        assert_eq!(s.label, "bb2stab_c0p25");
        assert_eq!(s.config.delta, DeltaPolicy::Adaptive(0.25));
        assert!(!s.config.safeguard_nonconvex);

        assert!(SolverSpec::parse("delta=2").is_err());
        assert!(SolverSpec::parse("bb3").is_err());
    }

    #[test]
    fn experiment_spec_parsing() {
        let text = "\
# raydan comparison
problem = raydan:n=100
x0 = const:-10
maxit = 5000
tol = 1e-6
seed = 7
solver = bb1
solver = bb1 delta=2
";
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(spec.problem, ProblemSelector::Raydan { n: 100 });
        assert_eq!(spec.solvers.len(), 2);
        assert_eq!(spec.max_iterations, 5000);
        assert_eq!(spec.seed, 7);

        assert!(ExperimentSpec::parse("x0 = zero\nsolver = bb1\n").is_err());
        assert!(ExperimentSpec::parse("problem = raydan:n=5\nx0 = zero\n").is_err());
        assert!(ExperimentSpec::parse("problem = raydan:n=5\nx0 = zero\nwat = 1\nsolver = bb1\n").is_err());
    }

    #[test]
    fn run_experiment_on_diagonal() {
        let mut spec = ExperimentSpec::new(
            ProblemSelector::Diagonal {
                eigenvalues: (1..=10).map(|i| i as f64).collect(),
            },
            StartSpec::Zero,
        );
        spec.solvers.push(SolverSpec::parse("bb1").unwrap());
        spec.solvers.push(SolverSpec::parse("bb1 delta=auto:0.25").unwrap());
        let reports = run_experiment(&spec).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert!(matches!(r.result.status, Termination::Converged(_)));
            assert!(r.cycle.is_none());
        }
    }

    #[test]
    fn trace_csv_roundtrip_and_shape() {
        let mut spec = ExperimentSpec::new(
            ProblemSelector::Diagonal {
                eigenvalues: vec![1.0, 2.0, 3.0],
            },
            StartSpec::Const(5.0),
        );
        spec.solvers.push(SolverSpec::parse("bb1 delta=0.5").unwrap());
        let reports = run_experiment(&spec).unwrap();
        let result = &reports[0].result;
        let text = trace_csv(result);
        assert!(text.starts_with("k,g_norm,s_norm,alpha,branch,region,q_k\n"));
        assert_eq!(text.lines().count(), result.trace.len() + 1);
        let parsed = parse_trace_csv(&text).unwrap();
        assert_eq!(parsed, result.trace);
    }

    #[test]
    fn infinite_policy_trace_has_no_stabcap_rows() {
        let mut spec = ExperimentSpec::new(
            ProblemSelector::Diagonal {
                eigenvalues: vec![1.0, 4.0],
            },
            StartSpec::Zero,
        );
        spec.solvers.push(SolverSpec::parse("bb2").unwrap());
        let reports = run_experiment(&spec).unwrap();
        let text = trace_csv(&reports[0].result);
        assert!(!text.contains("StabCap"));
    }

    #[test]
    fn summary_is_deterministic() {
        let mut spec = ExperimentSpec::new(
            ProblemSelector::Diagonal {
                eigenvalues: (1..=6).map(|i| i as f64).collect(),
            },
            StartSpec::Const(-3.0),
        );
        spec.solvers.push(SolverSpec::parse("bb1 delta=auto:0.25").unwrap());
        spec.solvers.push(SolverSpec::parse("bb2").unwrap());
        let a = summary_csv(&run_experiment(&spec).unwrap());
        let b = summary_csv(&run_experiment(&spec).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn cycle_diagnostics_reported_for_counterexample() {
        let c = crate::problems::CounterexampleConstants::new();
        let mut spec = ExperimentSpec::new(
            ProblemSelector::Counterexample { n: 1 },
            StartSpec::Explicit(vec![-c.b]),
        );
        spec.x1 = Some(StartSpec::Explicit(vec![-c.a]));
        spec.max_iterations = 200;
        spec.solvers.push(SolverSpec::parse("bb1").unwrap());
        let reports = run_experiment(&spec).unwrap();
        let report = &reports[0];
        assert_eq!(report.result.status, Termination::IterationLimit);
        let cycle = report.cycle.as_ref().expect("cycle diagnostics");
        assert_eq!(cycle.period, Some(4));
    }

    #[test]
    fn profile_example_two_solvers() {
        let mut results = BTreeMap::new();
        results.insert(
            "s1".to_string(),
            BTreeMap::from([
                ("p1".to_string(), (true, 10)),
                ("p2".to_string(), (true, 30)),
            ]),
        );
        results.insert(
            "s2".to_string(),
            BTreeMap::from([
                ("p1".to_string(), (true, 20)),
                ("p2".to_string(), (true, 15)),
            ]),
        );
        let curves = performance_profile(&results, &[1.0, 2.0]).unwrap();
        for c in &curves {
            assert_eq!(c.points[0], (1.0, 0.5));
            assert_eq!(c.points[1], (2.0, 1.0));
        }
    }

    #[test]
    fn profile_edge_cases() {
        let mut results = BTreeMap::new();
        results.insert(
            "only".to_string(),
            BTreeMap::from([
                ("p1".to_string(), (true, 5)),
                ("p2".to_string(), (true, 500)),
            ]),
        );
        let curves = performance_profile(&results, &[1.0, 3.0, 10.0]).unwrap();
        assert!(curves[0].points.iter().all(|&(_, f)| f == 1.0));

        let mut results = BTreeMap::new();
        results.insert(
            "loser".to_string(),
            BTreeMap::from([("p1".to_string(), (false, 0))]),
        );
        let curves = performance_profile(&results, &[1.0, 100.0]).unwrap();
        assert!(curves[0].points.iter().all(|&(_, f)| f == 0.0));

        let empty: BTreeMap<String, BTreeMap<String, (bool, usize)>> = BTreeMap::new();
        assert!(matches!(
            performance_profile(&empty, &[1.0]),
            Err(HarnessError::EmptyProblemSet)
        ));

        let mut results = BTreeMap::new();
        results.insert(
            "a".to_string(),
            BTreeMap::from([("p1".to_string(), (true, 1))]),
        );
        results.insert("b".to_string(), BTreeMap::new());
        assert!(matches!(
            performance_profile(&results, &[1.0]),
            Err(HarnessError::InconsistentResults { .. })
        ));

        let mut results = BTreeMap::new();
        results.insert(
            "a".to_string(),
            BTreeMap::from([("p1".to_string(), (true, 1))]),
        );
        assert!(matches!(
            performance_profile(&results, &[0.5]),
            Err(HarnessError::InvalidTau(_))
        ));
    }

    #[test]
    fn profile_fraction_monotone_and_capped_by_success_rate() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let n_solvers = rng.gen_range(1..5);
            let n_problems = rng.gen_range(1..8);
            let mut results = BTreeMap::new();
            for s in 0..n_solvers {
                let mut per = BTreeMap::new();
                for p in 0..n_problems {
                    per.insert(
                        format!("p{p}"),
                        (rng.gen_bool(0.8), rng.gen_range(1..200)),
                    );
                }
                results.insert(format!("s{s}"), per);
            }
            let taus = default_tau_grid();
            let curves = performance_profile(&results, &taus).unwrap();
            for c in &curves {
                let success_rate = results[&c.label]
                    .values()
                    .filter(|(solved, _)| *solved)
                    .count() as f64
                    / n_problems as f64;
                let mut prev = 0.0;
                for &(_, f) in &c.points {
                    assert!(f >= prev - 1e-15);
                    assert!(f <= success_rate + 1e-15);
                    prev = f;
                }
            }
        }
    }

    #[test]
    fn check_suite_passes() {
        let report = check("all", 1234);
        assert!(report.all_passed(), "failing checks:\n{report}");
    }
}
