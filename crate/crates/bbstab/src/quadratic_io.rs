//! Sparse symmetric matrices from Matrix Market files, the quadratic
//! objective `x.Ax/2 - b.x` with `b = A e` (so the exact solution is the
//! all-ones vector), and extremal eigenvalue estimation for the region
//! diagnostics.

use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::core::{dot, norm, Problem, SpectralBounds};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixMarketError {
    #[error("line {line}: malformed Matrix Market header")]
    MalformedHeader { line: usize },
    #[error("line {line}: unsupported Matrix Market declaration `{found}`")]
    UnsupportedField { line: usize, found: String },
    #[error("line {line}: matrix is {rows}x{cols}, only square matrices are supported")]
    NonSquare { line: usize, rows: usize, cols: usize },
    #[error("line {line}: index ({i}, {j}) outside 1..={n}")]
    IndexOutOfRange { line: usize, i: usize, j: usize, n: usize },
    #[error("line {line}: malformed entry `{text}`")]
    MalformedEntry { line: usize, text: String },
    #[error("file ends after {have} of {expected} entries")]
    TruncatedData { have: usize, expected: usize },
    #[error("line {line}: {have} entries already read, expected {expected}")]
    TooManyEntries { line: usize, have: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenEstimateError {
    #[error("power iteration did not settle within {0} iterations")]
    NoConvergence(usize),
    #[error("matrix does not look positive definite (estimated lambda_min {0})")]
    NotPositiveDefinite(f64),
}

/// Square sparse matrix in compressed-row form. Built from triplets; for
/// symmetric Matrix Market files both triangles are stored explicitly, so
/// `matvec` needs no symmetry logic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n` by `n` matrix from 0-based `(row, col, value)` triplets.
    /// Duplicates are summed; entries are stored in row-major, column-sorted
    /// order, which fixes the accumulation order of [`SparseMatrix::matvec`].
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (i, j, v) in sorted {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside a {n}x{n} matrix");
            match merged.last_mut() {
                Some((pi, pj, pv)) if *pi == i && *pj == j => *pv += v,
                _ => merged.push((i, j, v)),
            }
        }
        let mut row_offsets = vec![0usize; n + 1];
        for &(i, _, _) in &merged {
            row_offsets[i + 1] += 1;
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        SparseMatrix {
            n,
            row_offsets,
            col_indices: merged.iter().map(|&(_, j, _)| j).collect(),
            values: merged.iter().map(|&(_, _, v)| v).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both triangles for symmetric input).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored value at `(i, j)`, 0-based; zero if absent.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.col_indices[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    /// `y = A x` with row-major accumulation: within each row, stored
    /// entries are folded left to right, so repeated runs round identically.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "matvec input has wrong dimension");
        assert_eq!(y.len(), self.n, "matvec output has wrong dimension");
        for i in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[idx] * x[self.col_indices[idx]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Serializes to coordinate form with every stored entry (header
    /// `general`), using 17 significant digits so a reparse reproduces the
    /// matrix exactly.
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate real general\n");
        out.push_str(&format!("{} {} {}\n", self.n, self.n, self.nnz()));
        for i in 0..self.n {
            for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                out.push_str(&format!(
                    "{} {} {:.16e}\n",
                    i + 1,
                    self.col_indices[idx] + 1,
                    self.values[idx]
                ));
            }
        }
        out
    }
}

/// Parses Matrix Market coordinate data: header, `%` comments, a size line,
/// then 1-based `i j value` triples. Symmetric files are expanded to both
/// triangles; duplicate entries are summed. Only the real coordinate
/// symmetric/general subset is accepted.
pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix, MatrixMarketError> {
    let mut lines = text.lines().enumerate();

    let (header_line_no, header) = lines
        .next()
        .ok_or(MatrixMarketError::MalformedHeader { line: 1 })?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() < 4 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(MatrixMarketError::MalformedHeader {
            line: header_line_no + 1,
        });
    }
    if tokens[2] != "coordinate" {
        return Err(MatrixMarketError::UnsupportedField {
            line: header_line_no + 1,
            found: tokens[2].clone(),
        });
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(MatrixMarketError::UnsupportedField {
            line: header_line_no + 1,
            found: tokens[3].clone(),
        });
    }
    let symmetry = tokens.get(4).map(String::as_str).unwrap_or("general");
    let symmetric = match symmetry {
        "symmetric" => true,
        "general" => false,
        other => {
            return Err(MatrixMarketError::UnsupportedField {
                line: header_line_no + 1,
                found: other.to_string(),
            })
        }
    };

    // Size line: first non-comment, non-blank line after the header.
    let mut size: Option<(usize, usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        match size {
            None => {
                let mut parts = line.split_whitespace();
                let rows = parse_index(parts.next(), line, line_no)?;
                let cols = parse_index(parts.next(), line, line_no)?;
                let nnz = parse_index(parts.next(), line, line_no)?;
                if parts.next().is_some() {
                    return Err(MatrixMarketError::MalformedEntry {
                        line: line_no,
                        text: line.to_string(),
                    });
                }
                if rows != cols {
                    return Err(MatrixMarketError::NonSquare {
                        line: line_no,
                        rows,
                        cols,
                    });
                }
                size = Some((rows, cols, nnz, 0));
            }
            Some((n, _, expected, ref mut have)) => {
                if *have == expected {
                    return Err(MatrixMarketError::TooManyEntries {
                        line: line_no,
                        have: *have,
                        expected,
                    });
                }
                let mut parts = line.split_whitespace();
                let i = parse_index(parts.next(), line, line_no)?;
                let j = parse_index(parts.next(), line, line_no)?;
                let v: f64 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| MatrixMarketError::MalformedEntry {
                        line: line_no,
                        text: line.to_string(),
                    })?;
                if parts.next().is_some() {
                    return Err(MatrixMarketError::MalformedEntry {
                        line: line_no,
                        text: line.to_string(),
                    });
                }
                if i < 1 || i > n || j < 1 || j > n {
                    return Err(MatrixMarketError::IndexOutOfRange {
                        line: line_no,
                        i,
                        j,
                        n,
                    });
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
                *have += 1;
            }
        }
    }
    let (n, _, expected, have) = size.ok_or(MatrixMarketError::MalformedHeader { line: 1 })?;
    if have != expected {
        return Err(MatrixMarketError::TruncatedData { have, expected });
    }
    Ok(SparseMatrix::from_triplets(n, &triplets))
}

fn parse_index(token: Option<&str>, line: &str, line_no: usize) -> Result<usize, MatrixMarketError> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| MatrixMarketError::MalformedEntry {
            line: line_no,
            text: line.to_string(),
        })
}

/// Reads and parses a Matrix Market file.
pub fn parse_matrix_market_file(path: &Path) -> Result<SparseMatrix, std::io::Error> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_market(&text)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{path:?}: {e}")))
}

/// Quadratic objective `x.Ax/2 - b.x` with `b = A e`: the gradient is
/// `Ax - b` and the minimizer is the all-ones vector by construction.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    matrix: SparseMatrix,
    rhs: Vec<f64>,
    bounds: Option<SpectralBounds>,
}

/// Wires a parsed matrix into the quadratic objective, computing `b = A e`.
pub fn build_quadratic(matrix: SparseMatrix) -> QuadraticProblem {
    let ones = vec![1.0; matrix.n()];
    let rhs = matrix.matvec(&ones);
    QuadraticProblem {
        matrix,
        rhs,
        bounds: None,
    }
}

impl QuadraticProblem {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Attaches spectral bounds so runs record region diagnostics.
    pub fn with_bounds(mut self, bounds: SpectralBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }
}

impl Problem for QuadraticProblem {
    fn dimension(&self) -> usize {
        self.matrix.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        0.5 * dot(x, &ax) - dot(&self.rhs, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.matrix.matvec(x);
        for (gi, bi) in g.iter_mut().zip(&self.rhs) {
            *gi -= bi;
        }
        g
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0; self.matrix.n()])
    }
    fn spectral_bounds(&self) -> Option<SpectralBounds> {
        self.bounds
    }
}

/// Estimates bracketing eigenvalue bounds of a symmetric positive definite
/// matrix by power iteration: the top of the spectrum directly, the bottom
/// through the shifted matrix `sigma I - A` with `sigma` just above the top
/// estimate. The result is widened by 5% on each side so that diagnostic
/// inequalities hold despite estimation error; the bounds bracket, they do
/// not certify.
pub fn estimate_spectral_bounds(
    a: &SparseMatrix,
    max_iters: usize,
    tol: f64,
) -> Result<SpectralBounds, EigenEstimateError> {
    let lambda_hi = power_iteration(a, None, max_iters, tol)?;
    let sigma = 1.01 * lambda_hi;
    let mu = power_iteration(a, Some(sigma), max_iters, tol)?;
    let lambda_lo = sigma - mu;
    if !(lambda_lo > 0.0) {
        return Err(EigenEstimateError::NotPositiveDefinite(lambda_lo));
    }
    SpectralBounds::new(lambda_lo / 1.05, lambda_hi * 1.05)
        .map_err(|_| EigenEstimateError::NotPositiveDefinite(lambda_lo))
}

/// Dominant-eigenvalue power iteration on `A` or, with a shift, on
/// `sigma I - A`. Converges when the Rayleigh quotient settles to `tol`
/// relative change. The start vector is pseudo-random with a fixed seed so
/// estimates are reproducible.
fn power_iteration(
    a: &SparseMatrix,
    shift: Option<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<f64, EigenEstimateError> {
    let n = a.n();
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0) + 1e-3).collect();
    let v_norm = norm(&v);
    for vi in v.iter_mut() {
        *vi /= v_norm;
    }
    let mut w = vec![0.0; n];
    let mut rho_prev = f64::NAN;
    for _ in 0..max_iters {
        a.matvec_into(&v, &mut w);
        if let Some(sigma) = shift {
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = sigma * vi - *wi;
            }
        }
        let rho = dot(&v, &w);
        let w_norm = norm(&w);
        if w_norm == 0.0 {
            // sigma I - A annihilated v: the spectrum is the single point
            // sigma, i.e. rho = 0 for the shifted operator.
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / w_norm;
        }
        if !rho.is_finite() {
            return Err(EigenEstimateError::NoConvergence(max_iters));
        }
        if (rho - rho_prev).abs() <= tol * rho.abs().max(1.0) {
            return Ok(rho);
        }
        rho_prev = rho;
    }
    Err(EigenEstimateError::NoConvergence(max_iters))
}
