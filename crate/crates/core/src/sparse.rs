//! Sparse generator storage and the left vector-matrix product.
//!
//! Matrices are held in compressed sparse column form so that the left action
//! `vᵀM` is a gather over each column: one pass over the stored entries, no
//! scattered writes, and a fixed summation order.

use std::fmt;

use crate::error::{Error, Result};

/// Default relative tolerance on generator row sums.
pub const DEFAULT_ROW_SUM_TOL: f64 = 1e-12;

/// Storage order of the stored entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Compressed sparse column; entries ordered by column, then row.
    ColumnMajor,
}

/// A square sparse matrix in compressed sparse column form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets (0-based).
    ///
    /// Exact zeros are dropped. Out-of-range or repeated coordinates are
    /// structural errors.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (row, col, value) in triplets {
            if row >= dim || col >= dim {
                return Err(Error::IndexOutOfRange { row, col, dim });
            }
            if !value.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite value {value} at ({row}, {col})"
                )));
            }
            entries.push((row, col, value));
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::DuplicateEntry {
                    row: pair[0].0,
                    col: pair[0].1,
                });
            }
        }

        let mut col_ptr = vec![0usize; dim + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for &(row, col, value) in entries.iter().filter(|e| e.2 != 0.0) {
            col_ptr[col + 1] += 1;
            row_idx.push(row);
            values.push(value);
        }
        for c in 0..dim {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(SparseMatrix {
            dim,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn layout(&self) -> Layout {
        Layout::ColumnMajor
    }

    /// Stored entries as `(row, col, value)`, in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |col| {
            let span = self.col_ptr[col]..self.col_ptr[col + 1];
            self.row_idx[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(move |(&row, &value)| (row, col, value))
        })
    }

    /// Value at `(row, col)`, zero when not stored.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let span = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[span.clone()].binary_search(&row) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Returns `vᵀM`.
    pub fn left_multiply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.left_multiply_into(v, &mut out);
        Ok(out)
    }

    /// Writes `vᵀM` into `out`. Both slices must have length `dim`.
    pub fn left_multiply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        assert!(v.len() >= self.dim);
        for (col, slot) in out.iter_mut().enumerate() {
            let span = self.col_ptr[col]..self.col_ptr[col + 1];
            let rows = &self.row_idx[span.clone()];
            let vals = &self.values[span];
            // SAFETY: every stored row index is < dim <= v.len(), checked
            // when the matrix was built.
            let x = |k: usize| unsafe { *v.get_unchecked(rows[k]) } * vals[k];
            // Two partial sums halve the dependency chain on long columns.
            let (mut even, mut odd) = (0.0, 0.0);
            let pairs = rows.len() / 2;
            for k in 0..pairs {
                even += x(2 * k);
                odd += x(2 * k + 1);
            }
            if rows.len() % 2 == 1 {
                even += x(rows.len() - 1);
            }
            *slot = even + odd;
        }
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseMatrix {
        SparseMatrix {
            dim: self.dim,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Dense row-major copy. Only meant for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.dim]; self.dim];
        for (r, c, v) in self.iter() {
            dense[r][c] = v;
        }
        dense
    }
}

/// How strictly row sums are checked by [`RateMatrix::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Every row sums to zero within tolerance.
    Conservative,
    /// Rows may lose mass (sum below zero) but never create it.
    Substochastic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    PositiveDiagonal { row: usize, value: f64 },
    RowSum { row: usize, sum: f64 },
}

// Coordinates are reported 1-based, matching the Matrix Market files.
impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NegativeOffDiagonal { row, col, value } => write!(
                f,
                "negative off-diagonal ({},{}) = {value:e}",
                row + 1,
                col + 1
            ),
            Violation::PositiveDiagonal { row, value } => {
                write!(f, "positive diagonal ({0},{0}) = {value:e}", row + 1)
            }
            Violation::RowSum { row, sum } => {
                write!(f, "row-sum violation at row {} (sum {sum:e})", row + 1)
            }
        }
    }
}

/// Semantic violations found by [`RateMatrix::validate`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        const SHOWN: usize = 5;
        for (k, v) in self.violations.iter().take(SHOWN).enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        if self.violations.len() > SHOWN {
            write!(f, "; and {} more", self.violations.len() - SHOWN)?;
        }
        Ok(())
    }
}

/// Size summary of a generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityStats {
    pub d: usize,
    pub nnz: usize,
    /// Mean number of strictly positive entries per row.
    pub r: f64,
}

/// Sparse generator of a finite continuous-time Markov chain.
///
/// Construction only checks structure; semantic checks live in
/// [`RateMatrix::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    matrix: SparseMatrix,
    diag: Vec<f64>,
}

impl RateMatrix {
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Ok(Self::from_sparse(SparseMatrix::from_triplets(
            dim, triplets,
        )?))
    }

    pub fn from_sparse(matrix: SparseMatrix) -> Self {
        let mut diag = vec![0.0; matrix.dim()];
        for (r, c, v) in matrix.iter() {
            if r == c {
                diag[r] = v;
            }
        }
        RateMatrix { matrix, diag }
    }

    /// Builds a conservative generator from off-diagonal rates; each diagonal
    /// is set to minus its row's total outflow. Non-positive rates are skipped
    /// and repeated `(from, to)` pairs are summed.
    pub fn from_rates<I>(dim: usize, rates: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut raw = Vec::new();
        for (from, to, rate) in rates {
            if from == to {
                return Err(Error::invalid(format!("self-transition at state {from}")));
            }
            if from >= dim || to >= dim {
                return Err(Error::IndexOutOfRange {
                    row: from,
                    col: to,
                    dim,
                });
            }
            if rate > 0.0 {
                raw.push((from, to, rate));
            }
        }
        raw.sort_by_key(|&(f, t, _)| (f, t));
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(raw.len() + dim);
        for (from, to, rate) in raw {
            match triplets.last_mut() {
                Some(last) if last.0 == from && last.1 == to => last.2 += rate,
                _ => triplets.push((from, to, rate)),
            }
        }
        let mut outflow = vec![0.0; dim];
        for &(from, _, rate) in &triplets {
            outflow[from] += rate;
        }
        triplets.extend(
            outflow
                .iter()
                .enumerate()
                .filter(|(_, &o)| o > 0.0)
                .map(|(i, &o)| (i, i, -o)),
        );
        Self::from_triplets(dim, triplets)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.matrix.iter()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix.get(row, col)
    }

    /// `ρ = max_i |Q_ii|`, zero for the zero matrix.
    pub fn rho(&self) -> f64 {
        self.diag.iter().fold(0.0, |acc: f64, d| acc.max(d.abs()))
    }

    /// Returns `cQ`.
    pub fn scaled(&self, c: f64) -> RateMatrix {
        RateMatrix {
            matrix: self.matrix.map_values(|v| v * c),
            diag: self.diag.iter().map(|v| v * c).collect(),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim()];
        for (r, _, v) in self.matrix.iter() {
            sums[r] += v;
        }
        sums
    }

    pub fn validate(&self, mode: ValidationMode, row_sum_tol: f64) -> ValidationReport {
        let mut violations = Vec::new();
        for (row, col, value) in self.matrix.iter() {
            if row != col && value < 0.0 {
                violations.push(Violation::NegativeOffDiagonal { row, col, value });
            }
        }
        for (row, &value) in self.diag.iter().enumerate() {
            if value > 0.0 {
                violations.push(Violation::PositiveDiagonal { row, value });
            }
        }
        for (row, sum) in self.row_sums().into_iter().enumerate() {
            let limit = row_sum_tol * self.diag[row].abs().max(1.0);
            let bad = match mode {
                ValidationMode::Conservative => sum.abs() > limit,
                ValidationMode::Substochastic => sum > limit,
            };
            if bad {
                violations.push(Violation::RowSum { row, sum });
            }
        }
        ValidationReport { violations }
    }

    /// Consumes `self`, returning it only if validation passes.
    pub fn validated(self, mode: ValidationMode, row_sum_tol: f64) -> Result<Self> {
        self.ensure_valid(mode, row_sum_tol)?;
        Ok(self)
    }

    pub(crate) fn ensure_valid(&self, mode: ValidationMode, row_sum_tol: f64) -> Result<()> {
        let report = self.validate(mode, row_sum_tol);
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(report))
        }
    }

    /// `P = Q + ρI`.
    pub fn shift(&self) -> ShiftedKernel {
        ShiftedKernel::new(self)
    }

    /// `P = Qt + ρtI`, folding the time into the stored values once.
    pub fn shift_scaled(&self, t: f64) -> ShiftedKernel {
        ShiftedKernel::new(&self.scaled(t))
    }

    pub fn sparsity(&self) -> SparsityStats {
        let positive = self.matrix.values.iter().filter(|&&v| v > 0.0).count();
        let d = self.dim();
        SparsityStats {
            d,
            nnz: self.nnz(),
            r: if d == 0 {
                0.0
            } else {
                positive as f64 / d as f64
            },
        }
    }

    pub fn left_multiply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.matrix.left_multiply(v)
    }
}

/// The nonnegative shifted kernel `P = Q + ρI` together with `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedKernel {
    p: SparseMatrix,
    rho: f64,
}

impl ShiftedKernel {
    fn new(q: &RateMatrix) -> Self {
        let rho = q.rho();
        let m = &q.matrix;
        let dim = m.dim;
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::with_capacity(m.nnz() + dim);
        let mut values = Vec::with_capacity(m.nnz() + dim);
        col_ptr.push(0);
        for col in 0..dim {
            let span = m.col_ptr[col]..m.col_ptr[col + 1];
            let mut diag_done = false;
            let diag = rho + q.diag[col];
            for (&row, &value) in m.row_idx[span.clone()].iter().zip(&m.values[span]) {
                if !diag_done && row >= col {
                    if diag != 0.0 {
                        row_idx.push(col);
                        values.push(diag);
                    }
                    diag_done = true;
                    if row == col {
                        continue;
                    }
                }
                row_idx.push(row);
                values.push(value);
            }
            if !diag_done && diag != 0.0 {
                row_idx.push(col);
                values.push(diag);
            }
            col_ptr.push(row_idx.len());
        }
        ShiftedKernel {
            p: SparseMatrix {
                dim,
                col_ptr,
                row_idx,
                values,
            },
            rho,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.dim
    }

    pub fn left_multiply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.p.left_multiply(v)
    }

    pub fn left_multiply_into(&self, v: &[f64], out: &mut [f64]) {
        self.p.left_multiply_into(v, out)
    }
}

/// Checks that `v` is a finite nonnegative vector of length `dim`.
pub fn check_distribution(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    if let Some((i, x)) = v
        .iter()
        .enumerate()
        .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
    {
        return Err(Error::invalid(format!(
            "initial vector entry {} is {x}; entries must be finite and nonnegative",
            i + 1
        )));
    }
    Ok(())
}
