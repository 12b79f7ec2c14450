//! Reference eigensolvers and result comparison.
//!
//! The cyclic Jacobi method used here shares no code with the Householder
//! and QR pipeline, which is what makes it usable as a check on it.

use crate::config::SolverConfig;
use crate::dense;
use crate::error::{Error, Result};
use crate::householder::TridiagonalBatch;
use crate::qr::{givens, symmetric_2x2, wilkinson, SweepState};
use crate::solver::EigenResult;
use crate::tensor::BatchedSymmetric;

pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const DEFAULT_JACOBI_TOL: f64 = 1e-12;

/// Cyclic Jacobi eigensolver for one symmetric `n × n` matrix.
///
/// Returns unsorted `(values, vectors)` with vectors as columns of a
/// row-major matrix. Sweeps until every off-diagonal entry is at most
/// `tol · ‖A‖_F`.
pub fn jacobi_eig(a: &[f64], n: usize, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n || n == 0 {
        return Err(Error::ShapeMismatch(format!("expected {n}x{n} matrix, got {} entries", a.len())));
    }
    let mut m = a.to_vec();
    let mut v = dense::identity(n);
    let scale = dense::frobenius(a);
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off_max = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off_max = off_max.max(m[p * n + q].abs());
            }
        }
        if off_max <= tol * scale {
            return Ok(((0..n).map(|i| m[i * n + i]).collect(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[p * n + p], m[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // M ← JᵀMJ with J the (p, q) rotation [[c, s], [−s, c]]
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        batch_indices: vec![0],
        residual_offdiag_max: (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q].abs())
            .fold(0.0, f64::max),
    })
}

/// Eigenvalues of a `2 × 2` (quadratic formula) or `3 × 3` (trigonometric
/// Cardano) symmetric matrix, ascending.
pub fn closed_form_eig(a: &[f64], n: usize) -> Result<Vec<f64>> {
    match (n, a.len()) {
        (2, 4) => {
            let (p, b, d) = (a[0], a[1], a[3]);
            let mid = 0.5 * (p + d);
            let rad = (0.5 * (p - d)).hypot(b);
            Ok(vec![mid - rad, mid + rad])
        }
        (3, 9) => {
            let p1 = a[1] * a[1] + a[2] * a[2] + a[5] * a[5];
            let q = (a[0] + a[4] + a[8]) / 3.0;
            if p1 == 0.0 {
                let mut d = vec![a[0], a[4], a[8]];
                d.sort_by(f64::total_cmp);
                return Ok(d);
            }
            let p2 = (a[0] - q).powi(2) + (a[4] - q).powi(2) + (a[8] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b: Vec<f64> = (0..9)
                .map(|i| (a[i] - if i % 4 == 0 { q } else { 0.0 }) / p)
                .collect();
            let det_b = b[0] * (b[4] * b[8] - b[5] * b[7]) - b[1] * (b[3] * b[8] - b[5] * b[6])
                + b[2] * (b[3] * b[7] - b[4] * b[6]);
            let r = (det_b / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let hi = q + 2.0 * p * phi.cos();
            let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let mid = 3.0 * q - hi - lo;
            Ok(vec![lo, mid, hi])
        }
        _ => Err(Error::ShapeMismatch(format!("closed form needs a 2x2 or 3x3 matrix, got n = {n}"))),
    }
}

/// Jacobi solutions for every matrix of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBatch {
    pub dim: usize,
    pub values: Vec<Vec<f64>>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn oracle_batch(a: &BatchedSymmetric) -> Result<OracleBatch> {
    let n = a.dim();
    let (values, vectors) = a
        .matrices()
        .map(|m| jacobi_eig(m, n, DEFAULT_JACOBI_TOL))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(OracleBatch { dim: n, values, vectors })
}

/// Acceptance thresholds for [`compare`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalue error bound, scaled by the largest `|λ|` of the matrix.
    pub eigenvalue: f64,
    /// Bound on `‖A − VΛVᵀ‖_F / ‖A‖_F`.
    pub reconstruction: f64,
    /// Bound on the largest principal angle, if checked.
    pub subspace_angle: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigenvalue: 1e-8,
            reconstruction: 1e-10,
            subspace_angle: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub max_abs_eigenvalue_error: f64,
    /// Radians; sign-invariant and computed per cluster of near-equal values.
    pub max_subspace_angle: f64,
    pub reconstruction_residual: f64,
    pub pass: bool,
}

/// Largest difference between two eigenvalue sets after sorting both.
pub fn eigenvalue_error(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    dense::max_abs_diff(&xs, &ys)
}

/// Ascending permutation of `values`.
fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx
}

/// Largest principal angle between the column spans of `u` and `v`
/// (both `n × k`, orthonormal columns).
fn principal_angle(u: &[f64], v: &[f64], n: usize, k: usize) -> f64 {
    // sin θ_max = ‖(I − UUᵀ)V‖₂
    let utv = dense::matmul_tn(u, v, n, k, k);
    let proj = dense::matmul(u, &utv, n, k, k);
    let resid: Vec<f64> = v.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let gram = dense::matmul_tn(&resid, &resid, n, k, k);
    let top = jacobi_eig(&gram, k, DEFAULT_JACOBI_TOL)
        .map(|(vals, _)| vals.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    top.max(0.0).sqrt().min(1.0).asin()
}

fn columns(m: &[f64], n: usize, cols: &[usize]) -> Vec<f64> {
    let k = cols.len();
    let mut out = vec![0.0; n * k];
    for r in 0..n {
        for (j, &c) in cols.iter().enumerate() {
            out[r * k + j] = m[r * n + c];
        }
    }
    out
}

/// Compares one solved matrix against its reference solution.
pub fn compare_one(
    a: &[f64],
    n: usize,
    values: &[f64],
    vectors: Option<&[f64]>,
    ref_values: &[f64],
    ref_vectors: &[f64],
    tol: &Tolerances,
) -> OracleReport {
    let eig_err = eigenvalue_error(values, ref_values);
    let lambda_max = ref_values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut angle = 0.0f64;
    let mut residual = 0.0;
    if let Some(v) = vectors {
        let norm = dense::frobenius(a);
        let rec = dense::reconstruct(v, values, n);
        let diff: Vec<f64> = a.iter().zip(&rec).map(|(x, y)| x - y).collect();
        residual = if norm > 0.0 {
            dense::frobenius(&diff) / norm
        } else {
            dense::frobenius(&diff)
        };
        let ours = ascending(values);
        let theirs = ascending(ref_values);
        let gap = 1e-8 * lambda_max;
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && ref_values[theirs[end]] - ref_values[theirs[end - 1]] < gap {
                end += 1;
            }
            let u = columns(ref_vectors, n, &theirs[start..end]);
            let w = columns(v, n, &ours[start..end]);
            angle = angle.max(principal_angle(&u, &w, n, end - start));
            start = end;
        }
    }
    let mut pass = eig_err <= tol.eigenvalue * lambda_max.max(f64::MIN_POSITIVE);
    if vectors.is_some() {
        pass &= residual <= tol.reconstruction;
        if let Some(max_angle) = tol.subspace_angle {
            pass &= angle <= max_angle;
        }
    }
    OracleReport {
        max_abs_eigenvalue_error: eig_err,
        max_subspace_angle: angle,
        reconstruction_residual: residual,
        pass,
    }
}

/// Per-matrix comparison of a solve against the Jacobi reference.
pub fn compare(
    e: &EigenResult,
    reference: &OracleBatch,
    a: &BatchedSymmetric,
    tol: &Tolerances,
) -> Result<Vec<OracleReport>> {
    if e.batch != a.batch() || e.dim != a.dim() || reference.values.len() != a.batch() || reference.dim != a.dim()
    {
        return Err(Error::ShapeMismatch(format!(
            "result {}x{}, reference {}x{}, input {}x{}",
            e.batch,
            e.dim,
            reference.values.len(),
            reference.dim,
            a.batch(),
            a.dim()
        )));
    }
    Ok((0..a.batch())
        .map(|k| {
            compare_one(
                a.matrix(k),
                a.dim(),
                e.values(k),
                e.vectors(k),
                &reference.values[k],
                &reference.vectors[k],
                tol,
            )
        })
        .collect())
}

/// One shifted QR sweep on the leading `active × active` block of a dense
/// row-major `n × n` matrix, with every rotation applied across full rows and
/// columns: `T − μI = QR`, `T ← RQ + μI`, `q ← q·Q`.
pub fn dense_shifted_sweep(t: &mut [f64], n: usize, active: usize, mu: f64, q: Option<&mut [f64]>) {
    if active < 2 {
        return;
    }
    for i in 0..active {
        t[i * n + i] -= mu;
    }
    let mut rotations = Vec::with_capacity(active - 1);
    for i in 0..active - 1 {
        let (c, s) = givens(t[i * n + i], t[(i + 1) * n + i]);
        for j in 0..n {
            let (x, y) = (t[i * n + j], t[(i + 1) * n + j]);
            t[i * n + j] = c * x - s * y;
            t[(i + 1) * n + j] = s * x + c * y;
        }
        rotations.push((c, s));
    }
    let mut q = q;
    for (i, &(c, s)) in rotations.iter().enumerate() {
        rotate_dense_columns(t, n, i, c, s);
        if let Some(q) = q.as_deref_mut() {
            rotate_dense_columns(q, n, i, c, s);
        }
    }
    for i in 0..active {
        t[i * n + i] += mu;
    }
}

fn rotate_dense_columns(m: &mut [f64], n: usize, i: usize, c: f64, s: f64) {
    for row in m.chunks_exact_mut(n) {
        let (x, y) = (row[i], row[i + 1]);
        row[i] = c * x - s * y;
        row[i + 1] = s * x + c * y;
    }
}

/// Output of [`dense_diagonalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRun {
    /// `batch × dim`, in deflation order.
    pub eigenvalues: Vec<f64>,
    /// `Q_0 … Q_k` per matrix.
    pub q: Vec<Vec<f64>>,
    pub double_steps: usize,
}

/// The diagonalization schedule of [`crate::qr::run_to_convergence`] executed
/// with dense matrices and full-width rotations.
pub fn dense_diagonalize(t: &TridiagonalBatch, cfg: &SolverConfig) -> Result<DenseRun> {
    let (b, n) = (t.batch, t.dim);
    let mut mats: Vec<Vec<f64>> = (0..b).map(|k| t.dense_matrix(k)).collect();
    let mut qs: Vec<Vec<f64>> = (0..b).map(|_| dense::identity(n)).collect();
    let scale: Vec<f64> = mats.iter().map(|m| dense::frobenius(m).max(f64::MIN_POSITIVE)).collect();
    let eps = cfg.deflation_tol;
    let max_steps = cfg.max_double_steps_for(n);
    let trailing = |mats: &[Vec<f64>], a: usize| {
        mats.iter()
            .zip(&scale)
            .map(|(m, s)| m[(a - 1) * n + a - 2].abs() / s)
            .fold(0.0, f64::max)
    };
    let deflate = |mats: &mut [Vec<f64>], active: &mut usize| {
        while *active > 2 && trailing(mats, *active) < eps {
            let a = *active;
            for m in mats.iter_mut() {
                m[(a - 1) * n + a - 2] = 0.0;
                m[(a - 2) * n + a - 1] = 0.0;
            }
            *active -= 1;
        }
    };
    let sweep_all = |mats: &mut [Vec<f64>], qs: &mut [Vec<f64>], a: usize| {
        for (m, q) in mats.iter_mut().zip(qs.iter_mut()) {
            let (_, mu) = wilkinson(m[(a - 2) * n + a - 2], m[(a - 1) * n + a - 2], m[(a - 1) * n + a - 1]);
            dense_shifted_sweep(m, n, a, mu, Some(q));
        }
    };
    let mut active = n;
    let mut steps = 0;
    deflate(&mut mats, &mut active);
    while active > 2 {
        if steps >= max_steps {
            return Err(Error::NoConvergence {
                batch_indices: (0..b).collect(),
                residual_offdiag_max: trailing(&mats, active),
            });
        }
        sweep_all(&mut mats, &mut qs, active);
        deflate(&mut mats, &mut active);
        sweep_all(&mut mats, &mut qs, active);
        steps += 1;
        deflate(&mut mats, &mut active);
    }
    if active == 2 {
        for (m, q) in mats.iter_mut().zip(qs.iter_mut()) {
            let (c, s, l0, l1) = symmetric_2x2(m[0], m[n], m[n + 1]);
            m[0] = l0;
            m[n + 1] = l1;
            rotate_dense_columns(q, n, 0, c, s);
        }
    }
    let eigenvalues = mats.iter().flat_map(|m| (0..n).map(move |i| m[i * n + i])).collect();
    Ok(DenseRun {
        eigenvalues,
        q: qs,
        double_steps: steps,
    })
}

/// Runs the solver's diagonalization schedule on `t` and, before every sweep
/// and the final closeout, replays that step with dense full-width rotations
/// from the same state. Returns the largest elementwise discrepancy seen in
/// the tridiagonal matrices and in the accumulated `Q`.
pub fn windowed_discrepancy(t: &TridiagonalBatch, cfg: &SolverConfig) -> Result<f64> {
    let (b, n) = (t.batch, t.dim);
    let eps = cfg.deflation_tol;
    let max_steps = cfg.max_double_steps_for(n);
    let mut st = SweepState::new(t, true);
    let mut worst = 0.0f64;
    let mut checked_sweep = |st: &mut SweepState, mu: &[f64]| {
        let active = st.active_dim;
        let before = st.tridiagonal();
        let q_before = st.q.clone().expect("vectors requested");
        st.shifted_sweep(mu);
        let after = st.tridiagonal();
        let q_after = st.q.as_ref().expect("vectors requested");
        for k in 0..b {
            let mut m = before.dense_matrix(k);
            let mut q = q_before.matrix(k).to_vec();
            dense_shifted_sweep(&mut m, n, active, mu[k], Some(&mut q));
            worst = worst
                .max(dense::max_abs_diff(&m, &after.dense_matrix(k)))
                .max(dense::max_abs_diff(&q, q_after.matrix(k)));
        }
    };
    st.try_deflate(eps);
    while st.active_dim > 2 {
        if st.double_steps >= max_steps {
            return Err(Error::NoConvergence {
                batch_indices: (0..b).collect(),
                residual_offdiag_max: st.trailing_offdiag_rel_max(),
            });
        }
        let first = st.shifts();
        checked_sweep(&mut st, &first.mu_hi);
        st.try_deflate(eps);
        let second = st.shifts();
        checked_sweep(&mut st, &second.mu_hi);
        st.double_steps += 1;
        st.try_deflate(eps);
    }
    if st.active_dim == 2 {
        let before = st.tridiagonal();
        let q_before = st.q.clone().expect("vectors requested");
        st.finalize_small();
        let q_after = st.q.as_ref().expect("vectors requested");
        for k in 0..b {
            let (d, e) = (before.diag_of(k), before.offdiag_of(k));
            let (c, s, _, _) = symmetric_2x2(d[0], e[0], d[1]);
            let mut q = q_before.matrix(k).to_vec();
            rotate_dense_columns(&mut q, n, 0, c, s);
            worst = worst.max(dense::max_abs_diff(&q, q_after.matrix(k)));
        }
    }
    Ok(worst)
}
