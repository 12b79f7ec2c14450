//! Batched dense matrix values.
//!
//! Storage is batch-outermost, each matrix row-major and contiguous, so a
//! per-matrix kernel always sees a plain `&[f64]` of length `rows * cols`.

use crate::error::{Error, Result};

/// Default relative tolerance used when symmetrizing inputs.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

/// A batch of dense real matrices sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedMatrix {
    batch: usize,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl BatchedMatrix {
    /// Wraps `data`, checking its length and that every entry is finite.
    pub fn new(batch: usize, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if batch == 0 || rows == 0 || cols == 0 {
            return Err(Error::DimMismatch(format!(
                "batch, rows and cols must be positive (got {batch}x{rows}x{cols})"
            )));
        }
        let expected = batch * rows * cols;
        if data.len() != expected {
            return Err(Error::DimMismatch(format!(
                "{batch}x{rows}x{cols} batch needs {expected} entries, got {}",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|x| !x.is_finite()) {
            let per = rows * cols;
            let within = idx % per;
            return Err(Error::NonFinite {
                batch_index: idx / per,
                position: (within / cols, within % cols),
            });
        }
        Ok(Self {
            batch,
            rows,
            cols,
            data,
        })
    }

    pub fn zeros(batch: usize, rows: usize, cols: usize) -> Self {
        Self {
            batch,
            rows,
            cols,
            data: vec![0.0; batch * rows * cols],
        }
    }

    pub fn identity(batch: usize, dim: usize) -> Self {
        let mut m = Self::zeros(batch, dim, dim);
        for k in 0..batch {
            let mk = m.matrix_mut(k);
            for i in 0..dim {
                mk[i * dim + i] = 1.0;
            }
        }
        m
    }

    /// Stacks single matrices of identical shape into one batch.
    pub fn stack(rows: usize, cols: usize, matrices: &[Vec<f64>]) -> Result<Self> {
        let data: Vec<f64> = matrices.iter().flatten().copied().collect();
        Self::new(matrices.len(), rows, cols, data)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn matrix(&self, k: usize) -> &[f64] {
        let per = self.rows * self.cols;
        &self.data[k * per..(k + 1) * per]
    }

    pub fn matrix_mut(&mut self, k: usize) -> &mut [f64] {
        let per = self.rows * self.cols;
        &mut self.data[k * per..(k + 1) * per]
    }

    pub fn matrices(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows * self.cols)
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.rows + i) * self.cols + j]
    }

    /// Copies out matrices `range` as a new batch.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let per = self.rows * self.cols;
        Self {
            batch: range.len(),
            rows: self.rows,
            cols: self.cols,
            data: self.data[range.start * per..range.end * per].to_vec(),
        }
    }
}

/// A batch of symmetric matrices, the solver's input.
///
/// Construction goes through [`validate`], so a value of this type is always
/// finite and exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedSymmetric(BatchedMatrix);

impl BatchedSymmetric {
    /// Validates `data` with the default symmetry tolerance.
    pub fn new(batch: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        validate(BatchedMatrix::new(batch, dim, dim, data)?, DEFAULT_SYMMETRY_TOL)
    }

    pub fn identity(batch: usize, dim: usize) -> Self {
        Self(BatchedMatrix::identity(batch, dim))
    }

    /// Builds a batch of diagonal matrices, one row of `diagonals` per matrix.
    pub fn from_diagonals(dim: usize, diagonals: &[Vec<f64>]) -> Result<Self> {
        let mats: Vec<Vec<f64>> = diagonals
            .iter()
            .map(|d| {
                let mut m = vec![0.0; dim * dim];
                for (i, &v) in d.iter().enumerate().take(dim) {
                    m[i * dim + i] = v;
                }
                m
            })
            .collect();
        validate(BatchedMatrix::stack(dim, dim, &mats)?, DEFAULT_SYMMETRY_TOL)
    }

    pub(crate) fn from_symmetric_unchecked(m: BatchedMatrix) -> Self {
        debug_assert_eq!(m.rows, m.cols);
        Self(m)
    }

    pub fn batch(&self) -> usize {
        self.0.batch
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self, k: usize) -> &[f64] {
        self.0.matrix(k)
    }

    pub fn matrices(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.0.matrices()
    }

    pub fn as_matrix(&self) -> &BatchedMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> BatchedMatrix {
        self.0
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self(self.0.slice(range))
    }
}

impl AsRef<BatchedMatrix> for BatchedSymmetric {
    fn as_ref(&self) -> &BatchedMatrix {
        &self.0
    }
}

/// Checks that every matrix is square, finite and symmetric within
/// `symmetry_tol · max(1, ‖A‖_F)`, then replaces each matrix by
/// `(A + Aᵀ) / 2`.
pub fn validate(m: BatchedMatrix, symmetry_tol: f64) -> Result<BatchedSymmetric> {
    if m.rows != m.cols {
        return Err(Error::DimMismatch(format!(
            "symmetric batch needs square matrices, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut m = m;
    for k in 0..m.batch {
        let a = m.matrix_mut(k);
        if let Some(idx) = a.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                batch_index: k,
                position: (idx / n, idx % n),
            });
        }
        let scale = crate::dense::frobenius(a).max(1.0);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((a[i * n + j] - a[j * n + i]).abs());
            }
        }
        if worst > symmetry_tol * scale {
            return Err(Error::NonSymmetric {
                batch_index: k,
                max_asymmetry: worst,
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                let mid = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = mid;
                a[j * n + i] = mid;
            }
        }
    }
    Ok(BatchedSymmetric(m))
}
