//! Full batched eigendecomposition `A = (P Q_0 … Q_k) Λ (P Q_0 … Q_k)ᵀ`
//! and the spectral matrix functions built on it.

use crate::batch;
use crate::config::{SolverConfig, SortOrder};
use crate::dense;
use crate::error::{Error, Result};
use crate::householder::tridiagonalize;
use crate::qr::{diagonalize, Diagnostics};
use crate::tensor::{validate, BatchedMatrix, BatchedSymmetric};

/// Eigenvalues, eigenvectors and iteration counters of one batched solve.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub batch: usize,
    pub dim: usize,
    /// `batch × dim`, ordered per the config.
    pub eigenvalues: Vec<f64>,
    /// Column `j` of matrix `k` pairs with `eigenvalues[k * dim + j]`.
    /// `None` on the values-only path.
    pub eigenvectors: Option<BatchedMatrix>,
    pub diagnostics: Diagnostics,
}

impl EigenResult {
    pub fn values(&self, k: usize) -> &[f64] {
        &self.eigenvalues[k * self.dim..(k + 1) * self.dim]
    }

    pub fn vectors(&self, k: usize) -> Option<&[f64]> {
        self.eigenvectors.as_ref().map(|v| v.matrix(k))
    }
}

/// Eigendecomposition of every matrix in `a`.
pub fn batched_eig(a: &BatchedSymmetric, cfg: &SolverConfig) -> Result<EigenResult> {
    cfg.check(a.dim())?;
    let (b, n) = (a.batch(), a.dim());
    let (t, _) = tridiagonalize(a, cfg)?;
    let diag = diagonalize(&t, cfg)?;
    let mut values = diag.eigenvalues;
    let mut vectors = match (t.transform, diag.q) {
        (Some(p), Some(q)) => {
            let parallel = batch::worth_parallel(b, n);
            let prods = batch::map(b, parallel, |k| dense::matmul(p.matrix(k), q.matrix(k), n, n, n));
            Some(BatchedMatrix::new(b, n, n, prods.concat())?)
        }
        _ => None,
    };
    order_and_normalize(&mut values, vectors.as_mut(), n, cfg.sort);
    Ok(EigenResult {
        batch: b,
        dim: n,
        eigenvalues: values,
        eigenvectors: vectors,
        diagnostics: diag.diagnostics,
    })
}

/// Validates a raw batch with `cfg.symmetry_tol`, then solves it.
pub fn batched_eig_raw(m: BatchedMatrix, cfg: &SolverConfig) -> Result<EigenResult> {
    batched_eig(&validate(m, cfg.symmetry_tol)?, cfg)
}

/// Sorts each matrix's eigenvalues (permuting vector columns alongside) and
/// flips every column so its largest-magnitude entry is nonnegative.
fn order_and_normalize(values: &mut [f64], mut vectors: Option<&mut BatchedMatrix>, n: usize, sort: SortOrder) {
    for (k, vals) in values.chunks_exact_mut(n).enumerate() {
        let mut perm: Vec<usize> = (0..n).collect();
        match sort {
            SortOrder::Descending => perm.sort_by(|&i, &j| vals[j].total_cmp(&vals[i])),
            SortOrder::Ascending => perm.sort_by(|&i, &j| vals[i].total_cmp(&vals[j])),
            SortOrder::None => {}
        }
        let sorted: Vec<f64> = perm.iter().map(|&i| vals[i]).collect();
        vals.copy_from_slice(&sorted);
        if let Some(v) = vectors.as_deref_mut() {
            let m = v.matrix_mut(k);
            let old = m.to_vec();
            for (new_col, &old_col) in perm.iter().enumerate() {
                let mut pivot = 0;
                for r in 0..n {
                    if old[r * n + old_col].abs() > old[pivot * n + old_col].abs() {
                        pivot = r;
                    }
                }
                let sign = if old[pivot * n + old_col] < 0.0 { -1.0 } else { 1.0 };
                for r in 0..n {
                    m[r * n + new_col] = sign * old[r * n + old_col];
                }
            }
        }
    }
}

/// Relative eigenvalue floor applied by [`matrix_power_default`].
pub const DEFAULT_FLOOR_REL: f64 = 1e-12;

/// `V · diag(max(λ, floor)^p) · Vᵀ` per matrix.
///
/// Negative or fractional exponents need a positive spectrum: with
/// `floor == 0` any `λ ≤ 0` is an error.
pub fn matrix_power(e: &EigenResult, p: f64, floor: f64) -> Result<BatchedMatrix> {
    matrix_power_with(e, p, |_| floor)
}

/// [`matrix_power`] with the floor set to `1e−12 · λ_max` of each matrix.
pub fn matrix_power_default(e: &EigenResult, p: f64) -> Result<BatchedMatrix> {
    matrix_power_with(e, p, |vals| {
        DEFAULT_FLOOR_REL * vals.iter().copied().fold(0.0, f64::max)
    })
}

fn matrix_power_with(e: &EigenResult, p: f64, floor_of: impl Fn(&[f64]) -> f64) -> Result<BatchedMatrix> {
    let v = e.eigenvectors.as_ref().ok_or(Error::MissingEigenvectors)?;
    let n = e.dim;
    let needs_positive = p < 0.0 || p.fract() != 0.0;
    let mut out = Vec::with_capacity(e.batch * n * n);
    for k in 0..e.batch {
        let vals = e.values(k);
        let floor = floor_of(vals);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if needs_positive && min.max(floor) <= 0.0 {
            return Err(Error::NonPositiveSpectrum {
                batch_index: k,
                min_eigenvalue: min,
            });
        }
        let powered: Vec<f64> = vals.iter().map(|&l| l.max(floor).powf(p)).collect();
        let mut m = dense::reconstruct(v.matrix(k), &powered, n);
        for i in 0..n {
            for j in i + 1..n {
                let mid = 0.5 * (m[i * n + j] + m[j * n + i]);
                m[i * n + j] = mid;
                m[j * n + i] = mid;
            }
        }
        out.extend(m);
    }
    BatchedMatrix::new(e.batch, n, n, out)
}

/// ZCA whitening of `batch × channels × samples` features:
/// `((X − μ)(X − μ)ᵀ + εI)^{−½} (X − μ)` with `μ` the per-channel mean.
///
/// The covariance is the unnormalized scatter matrix (no `1/samples`).
pub fn zca_whiten(x: &BatchedMatrix, eps_reg: f64) -> Result<BatchedMatrix> {
    if !(eps_reg >= 0.0) {
        return Err(Error::InvalidConfig(format!("eps_reg must be nonnegative, got {eps_reg}")));
    }
    let (b, c, s) = (x.batch(), x.rows(), x.cols());
    let mut centered = x.clone();
    let mut covs = Vec::with_capacity(b * c * c);
    for k in 0..b {
        let xc = centered.matrix_mut(k);
        for row in xc.chunks_exact_mut(s) {
            let mean = row.iter().sum::<f64>() / s as f64;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        let xt = dense::transpose(xc, c, s);
        let mut cov = dense::matmul(xc, &xt, c, s, c);
        for i in 0..c {
            cov[i * c + i] += eps_reg;
        }
        covs.extend(cov);
    }
    let cov = validate(BatchedMatrix::new(b, c, c, covs)?, crate::tensor::DEFAULT_SYMMETRY_TOL)?;
    let eig = batched_eig(&cov, &SolverConfig::default())?;
    let inv_sqrt = matrix_power(&eig, -0.5, 0.0)?;
    let mut out = Vec::with_capacity(b * c * s);
    for k in 0..b {
        out.extend(dense::matmul(inv_sqrt.matrix(k), centered.matrix(k), c, c, s));
    }
    BatchedMatrix::new(b, c, s, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_descending() {
        let a = BatchedSymmetric::from_diagonals(3, &[vec![1.0, 2.0, 3.0]]).unwrap();
        let e = batched_eig(&a, &SolverConfig::default()).unwrap();
        assert_eq!(e.values(0), &[3.0, 2.0, 1.0]);
        assert_eq!(e.vectors(0).unwrap(), &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn classic_two_by_two() {
        let a = BatchedSymmetric::new(1, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = batched_eig(&a, &SolverConfig::default()).unwrap();
        assert!((e.values(0)[0] - 3.0).abs() < 1e-15);
        assert!((e.values(0)[1] - 1.0).abs() < 1e-15);
        let v = e.vectors(0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0] - h).abs() < 1e-15 && (v[2] - h).abs() < 1e-15);
        assert!((v[1].abs() - h).abs() < 1e-15 && (v[1] + v[3]).abs() < 1e-15);
    }

    #[test]
    fn ascending_and_unsorted() {
        let a = BatchedSymmetric::from_diagonals(3, &[vec![2.0, 3.0, 1.0]]).unwrap();
        let cfg = SolverConfig {
            sort: SortOrder::Ascending,
            ..SolverConfig::default()
        };
        assert_eq!(batched_eig(&a, &cfg).unwrap().values(0), &[1.0, 2.0, 3.0]);
        let cfg = SolverConfig {
            sort: SortOrder::None,
            ..SolverConfig::default()
        };
        assert_eq!(batched_eig(&a, &cfg).unwrap().values(0), &[2.0, 3.0, 1.0]);
    }

    #[test]
    fn powers_of_simple_spectra() {
        let id = BatchedSymmetric::identity(2, 3);
        let e = batched_eig(&id, &SolverConfig::default()).unwrap();
        assert_eq!(matrix_power(&e, -0.5, 0.0).unwrap(), BatchedMatrix::identity(2, 3));

        let a = BatchedSymmetric::from_diagonals(2, &[vec![4.0, 9.0]]).unwrap();
        let e = batched_eig(&a, &SolverConfig::default()).unwrap();
        let r = matrix_power(&e, 0.5, 0.0).unwrap();
        assert!(dense::max_abs_diff(r.matrix(0), &[2.0, 0.0, 0.0, 3.0]) < 1e-15);
    }

    #[test]
    fn non_positive_spectrum_is_rejected_without_floor() {
        let a = BatchedSymmetric::from_diagonals(2, &[vec![4.0, 0.0]]).unwrap();
        let e = batched_eig(&a, &SolverConfig::default()).unwrap();
        assert!(matches!(
            matrix_power(&e, -0.5, 0.0),
            Err(Error::NonPositiveSpectrum { batch_index: 0, .. })
        ));
        assert!(matrix_power(&e, 2.0, 0.0).is_ok());
        assert!(matrix_power_default(&e, -0.5).is_ok());
    }

    #[test]
    fn values_only_has_no_vectors() {
        let a = BatchedSymmetric::identity(1, 3);
        let e = batched_eig(&a, &SolverConfig::values_only()).unwrap();
        assert!(e.eigenvectors.is_none());
        assert!(matches!(matrix_power(&e, 1.0, 0.0), Err(Error::MissingEigenvectors)));
    }

    #[test]
    fn single_channel_whitening() {
        let x = BatchedMatrix::new(1, 1, 2, vec![1.0, -1.0]).unwrap();
        let w = zca_whiten(&x, 0.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w.data()[0] - h).abs() < 1e-15 && (w.data()[1] + h).abs() < 1e-15);
    }

    #[test]
    fn singular_covariance_needs_regularization() {
        let x = BatchedMatrix::new(1, 1, 2, vec![3.0, 3.0]).unwrap();
        assert!(matches!(zca_whiten(&x, 0.0), Err(Error::NonPositiveSpectrum { .. })));
        assert!(zca_whiten(&x, 1e-5).is_ok());
    }
}
