//! Explicit shifted QR iterations on a batch of symmetric tridiagonal
//! matrices, built from Givens rotations.
//!
//! One sweep factors `T − μI = QR` with left-to-right rotations and forms
//! `RQ + μI`. The two halves are interleaved so each rotation only reads and
//! writes a constant-size neighbourhood of the band; the right-multiplication
//! by rotation `i − 1` is delayed until rotation `i` has been generated from
//! the untouched column `i`.
//!
//! A double step runs two sweeps shifted by both eigenvalues of the trailing
//! `2 × 2` block. Between and after the two sweeps the active block shrinks
//! while the largest relative trailing off-diagonal over the whole batch is
//! below the deflation threshold; all matrices in a batch therefore share one
//! active size.

use crate::batch;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::householder::TridiagonalBatch;
use crate::tensor::BatchedMatrix;

/// Rotation `R = [[c, s], [−s, c]]` acting on the `(position, position+1)`
/// plane, with `Rᵀ(x1, x2)ᵀ = (r, 0)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GivensCoeffs {
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub position: usize,
}

const SAFE_MIN: f64 = 1e-250;
const SAFE_SCALE: f64 = 1.0715086071862673e301; // 2^1000
// squares of values in this range neither overflow nor underflow
const SQRT_SAFE_MIN: f64 = 1e-150;
const SQRT_SAFE_MAX: f64 = 1e150;

/// `c = x1/r`, `s = −x2/r` with `r = √(x1² + x2²)`; `(1, 0)` when both vanish.
#[inline]
pub fn givens(x1: f64, x2: f64) -> (f64, f64) {
    if x2 == 0.0 {
        return (if x1 < 0.0 { -1.0 } else { 1.0 }, 0.0);
    }
    let big = x1.abs().max(x2.abs());
    if (SQRT_SAFE_MIN..SQRT_SAFE_MAX).contains(&big) {
        let r = (x1 * x1 + x2 * x2).sqrt();
        return (x1 / r, -x2 / r);
    }
    // subnormal inputs lose bits in the quotients; rescale by a power of two
    let (x1, x2) = if big < SAFE_MIN {
        (x1 * SAFE_SCALE, x2 * SAFE_SCALE)
    } else {
        (x1, x2)
    };
    let r = x1.hypot(x2);
    (x1 / r, -x2 / r)
}

pub fn givens_coeffs(x1: &[f64], x2: &[f64], position: usize) -> GivensCoeffs {
    let (c, s) = x1.iter().zip(x2).map(|(&a, &b)| givens(a, b)).unzip();
    GivensCoeffs { c, s, position }
}

/// Rotation that diagonalizes `[[a, b], [b, d]]`, chosen with `|θ| ≤ 45°`.
///
/// Returns `(c, s, λ₀, λ₁)` where `λ₀` lands in the `a` slot and `λ₁` in the
/// `d` slot of `RᵀXR`.
pub fn symmetric_2x2(a: f64, b: f64, d: f64) -> (f64, f64, f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0, a, d);
    }
    let m = (a - d) / (2.0 * b);
    // smaller root of n² − 2mn − 1 = 0, written without cancellation
    let root = if m.abs() < SQRT_SAFE_MAX { (1.0 + m * m).sqrt() } else { m.abs() };
    let t = if m >= 0.0 { -1.0 / (m + root) } else { 1.0 / (root - m) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;
    let cs = c * s;
    let l0 = a * c * c - 2.0 * b * cs + d * s * s;
    let l1 = a * s * s + 2.0 * b * cs + d * c * c;
    (c, s, l0, l1)
}

/// Both eigenvalues of `[[a, b], [b, d]]` as `(μ_lo, μ_hi)`, `μ_hi` being the
/// one closer to `d`.
pub fn wilkinson(a: f64, b: f64, d: f64) -> (f64, f64) {
    let (_, _, l0, l1) = symmetric_2x2(a, b, d);
    if (l1 - d).abs() <= (l0 - d).abs() {
        (l0, l1)
    } else {
        (l1, l0)
    }
}

/// Per-matrix shift pair taken from the trailing `2 × 2` block.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPair {
    pub mu_lo: Vec<f64>,
    pub mu_hi: Vec<f64>,
}

pub fn wilkinson_shifts(a: &[f64], b: &[f64], d: &[f64]) -> ShiftPair {
    let (mu_lo, mu_hi) = a
        .iter()
        .zip(b)
        .zip(d)
        .map(|((&a, &b), &d)| wilkinson(a, b, d))
        .unzip();
    ShiftPair { mu_lo, mu_hi }
}

/// Columns `i`, `i+1` of a row-major `n`-column matrix ← themselves times
/// the rotation, over rows `0..rows`.
#[inline]
fn rotate_columns(q: &mut [f64], n: usize, i: usize, c: f64, s: f64, rows: usize) {
    for row in q.chunks_exact_mut(n).take(rows) {
        let (x, y) = (row[i], row[i + 1]);
        row[i] = c * x - s * y;
        row[i + 1] = s * x + c * y;
    }
}

/// Rows of the eigenvector accumulator that can be nonzero in columns
/// `i`, `i + 1` when its lower bandwidth is `bandwidth`.
#[inline]
fn q_rows(n: usize, i: usize, bandwidth: usize) -> usize {
    n.min(i + 2 + bandwidth)
}

/// `Q ← Q·R` for every matrix, touching only columns `position` and
/// `position + 1` in rows `0..row_end`.
///
/// Rows at or beyond `row_end` must already be zero in both columns (the
/// accumulator's banded structure); pass `Q.rows()` for a dense `Q`.
pub fn economic_q_update(q: &mut BatchedMatrix, g: &GivensCoeffs, row_end: usize) {
    let n = q.cols();
    assert!(g.position + 2 <= n, "rotation plane outside the matrix");
    let rows = row_end.min(q.rows());
    for k in 0..q.batch() {
        rotate_columns(q.matrix_mut(k), n, g.position, g.c[k], g.s[k], rows);
    }
}

/// One shifted sweep on the leading `active × active` block of a single
/// tridiagonal matrix. Returns the number of rotations generated.
///
/// With `q = Some((q, bandwidth))` each rotation is also folded into the
/// `n × n` accumulator `q` whose lower bandwidth is `bandwidth`.
pub fn sweep_matrix(
    diag: &mut [f64],
    off: &mut [f64],
    active: usize,
    mu: f64,
    mut q: Option<(&mut [f64], usize)>,
) -> usize {
    if active < 2 {
        return 0;
    }
    let n = diag.len();
    // Row i of the partially triangularized T − μI holds (x, y) at columns
    // (i, i+1); column i+1 below the diagonal is still untouched.
    let mut x = diag[0] - mu;
    let mut y = off[0];
    let (mut c_prev, mut s_prev) = (1.0, 0.0);
    for i in 0..active - 1 {
        let e = off[i];
        let d_next = diag[i + 1] - mu;
        let (c, s) = givens(x, e);
        let r_diag = c * x - s * e;
        let r_super = c * y - s * d_next;
        x = s * y + c * d_next;
        y = if i + 2 < active { c * off[i + 1] } else { 0.0 };
        // delayed right-multiplication by rotation i − 1
        if i > 0 {
            off[i - 1] = -s_prev * r_diag;
        }
        diag[i] = c * c_prev * r_diag - s * r_super + mu;
        if let Some((qm, bw)) = q.as_mut() {
            rotate_columns(qm, n, i, c, s, q_rows(n, i, *bw));
        }
        c_prev = c;
        s_prev = s;
    }
    off[active - 2] = -s_prev * x;
    diag[active - 1] = c_prev * x + mu;
    active - 1
}

/// Shifted sweeps with `mu_hi` then `mu_lo` from the trailing block.
pub fn double_step_matrix(
    diag: &mut [f64],
    off: &mut [f64],
    active: usize,
    mut q: Option<(&mut [f64], usize)>,
) -> usize {
    let (mu_lo, mu_hi) = wilkinson(diag[active - 2], off[active - 2], diag[active - 1]);
    let first = sweep_matrix(diag, off, active, mu_hi, q.as_mut().map(|(m, bw)| (&mut **m, *bw)));
    let second = sweep_matrix(diag, off, active, mu_lo, q.map(|(m, bw)| (m, bw + 1)));
    first + second
}

/// Iteration state shared by the whole batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepState {
    pub batch: usize,
    pub dim: usize,
    /// `batch × dim`; slots at or beyond `active_dim` hold locked eigenvalues.
    pub diag: Vec<f64>,
    /// `batch × (dim − 1)`.
    pub offdiag: Vec<f64>,
    /// Accumulated `Q_0 … Q_k`.
    pub q: Option<BatchedMatrix>,
    /// Lower bandwidth of `q` (entries below it are structurally zero).
    pub q_bandwidth: usize,
    pub active_dim: usize,
    /// Shrink events issued by the deflation gate.
    pub reductions: usize,
    pub double_steps: usize,
    /// Rotations generated by sweeps, counted per matrix.
    pub rotation_count: usize,
    pub sweeps: usize,
    /// Sum over double steps of the shrink count when the step started.
    pub reduction_sum: usize,
    /// Per-matrix `‖T‖_F` (floored at the smallest normal), the unit of the
    /// deflation threshold.
    pub scale: Vec<f64>,
}

impl SweepState {
    /// Starts from `t`; the accumulator is the identity when vectors are wanted.
    pub fn new(t: &TridiagonalBatch, compute_vectors: bool) -> Self {
        let q = compute_vectors.then(|| BatchedMatrix::identity(t.batch, t.dim));
        Self::build(t, q, 0)
    }

    /// Starts from `t` with an arbitrary (dense) accumulator.
    pub fn with_q(t: &TridiagonalBatch, q: BatchedMatrix) -> Self {
        let bw = t.dim.saturating_sub(1);
        Self::build(t, Some(q), bw)
    }

    fn build(t: &TridiagonalBatch, q: Option<BatchedMatrix>, q_bandwidth: usize) -> Self {
        Self {
            batch: t.batch,
            dim: t.dim,
            diag: t.diag.clone(),
            offdiag: t.offdiag.clone(),
            q,
            q_bandwidth,
            active_dim: t.dim,
            reductions: 0,
            double_steps: 0,
            rotation_count: 0,
            sweeps: 0,
            reduction_sum: 0,
            scale: (0..t.batch)
                .map(|k| {
                    let d = t.diag_of(k).iter().map(|x| x * x).sum::<f64>();
                    let e = t.offdiag_of(k).iter().map(|x| x * x).sum::<f64>();
                    (d + 2.0 * e).sqrt().max(f64::MIN_POSITIVE)
                })
                .collect(),
        }
    }

    pub fn diag_of(&self, k: usize) -> &[f64] {
        &self.diag[k * self.dim..(k + 1) * self.dim]
    }

    pub fn offdiag_of(&self, k: usize) -> &[f64] {
        let m = self.dim - 1;
        &self.offdiag[k * m..(k + 1) * m]
    }

    /// Locked eigenvalues of matrix `k`.
    pub fn locked(&self, k: usize) -> &[f64] {
        &self.diag_of(k)[self.active_dim..]
    }

    /// The current tridiagonal matrices as a batch.
    pub fn tridiagonal(&self) -> TridiagonalBatch {
        TridiagonalBatch::new(self.batch, self.dim, self.diag.clone(), self.offdiag.clone())
            .expect("finite by construction")
    }

    /// Largest `|t[a−1][a−2]|` over the batch for the active size `a`.
    pub fn trailing_offdiag_max(&self) -> f64 {
        if self.active_dim < 2 {
            return 0.0;
        }
        let m = self.dim - 1;
        (0..self.batch)
            .map(|k| self.offdiag[k * m + self.active_dim - 2].abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|t[a−1][a−2]| / ‖T‖_F` over the batch; the deflation gate.
    pub fn trailing_offdiag_rel_max(&self) -> f64 {
        if self.active_dim < 2 {
            return 0.0;
        }
        let m = self.dim - 1;
        (0..self.batch)
            .map(|k| self.offdiag[k * m + self.active_dim - 2].abs() / self.scale[k])
            .fold(0.0, f64::max)
    }

    /// Average shrink count over the double steps run so far.
    pub fn mean_reductions(&self) -> f64 {
        if self.double_steps == 0 {
            0.0
        } else {
            self.reduction_sum as f64 / self.double_steps as f64
        }
    }

    fn bump_bandwidth(&mut self, sweeps: usize) {
        self.q_bandwidth = (self.q_bandwidth + sweeps).min(self.dim.saturating_sub(1));
    }

    /// Runs `per_matrix(diag, off, q)` over the batch.
    fn for_each_matrix<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [f64], &mut [f64], Option<(&mut [f64], usize)>) + Sync + Send,
    {
        let n = self.dim;
        let bw = self.q_bandwidth;
        let parallel = batch::worth_parallel(self.batch, n);
        let diags = self.diag.chunks_exact_mut(n);
        let offs = self.offdiag.chunks_mut((n - 1).max(1));
        match self.q.as_mut() {
            Some(q) => {
                let items: Vec<_> = diags
                    .zip(offs)
                    .zip(q.data_mut().chunks_exact_mut(n * n))
                    .collect();
                batch::for_each(items, parallel, |k, ((d, e), qm)| f(k, d, e, Some((qm, bw))));
            }
            None => {
                let items: Vec<_> = diags.zip(offs).collect();
                batch::for_each(items, parallel, |k, (d, e)| f(k, d, e, None));
            }
        }
    }

    /// One sweep shifted by `mu[k]` on every matrix's active block.
    pub fn shifted_sweep(&mut self, mu: &[f64]) {
        assert_eq!(mu.len(), self.batch, "one shift per matrix");
        let active = self.active_dim;
        if active < 2 {
            return;
        }
        self.for_each_matrix(|k, d, e, q| {
            sweep_matrix(d, e, active, mu[k], q);
        });
        self.rotation_count += active - 1;
        self.sweeps += 1;
        self.bump_bandwidth(1);
    }

    /// Shift pair from each matrix's trailing active block.
    pub fn shifts(&self) -> ShiftPair {
        let a = self.active_dim;
        assert!(a >= 2, "shifts need a 2x2 trailing block");
        let m = self.dim - 1;
        let (x, (y, z)): (Vec<f64>, (Vec<f64>, Vec<f64>)) = (0..self.batch)
            .map(|k| {
                let d = self.diag_of(k);
                (d[a - 2], (self.offdiag[k * m + a - 2], d[a - 1]))
            })
            .unzip();
        wilkinson_shifts(&x, &y, &z)
    }

    /// Two sweeps shifted by `μ_hi` then `μ_lo`, both taken from the trailing
    /// block before the first sweep.
    pub fn double_shift_step(&mut self) {
        let active = self.active_dim;
        assert!(active >= 3, "double_shift_step needs an active block of at least 3");
        self.reduction_sum += self.reductions;
        self.for_each_matrix(|_, d, e, q| {
            double_step_matrix(d, e, active, q);
        });
        self.rotation_count += 2 * (active - 1);
        self.sweeps += 2;
        self.double_steps += 1;
        self.bump_bandwidth(2);
    }

    /// The double step used by [`run_to_convergence`]: a `μ_hi` sweep, the
    /// deflation gate, then a second sweep shifted by the eigenvalue of the
    /// half-step's trailing block nearest its last diagonal entry.
    ///
    /// With the frozen `μ_lo`, a trailing block that has already split off
    /// is rotated back into a full `2 × 2` by the second (exact-shift) sweep,
    /// and matrices waiting on the batch-wide gate lose their convergence.
    pub fn gated_double_step(&mut self, eps: f64) {
        assert!(self.active_dim >= 3, "gated_double_step needs an active block of at least 3");
        self.reduction_sum += self.reductions;
        self.near_shift_sweep();
        self.try_deflate(eps);
        self.near_shift_sweep();
        self.double_steps += 1;
    }

    /// `shifted_sweep(&self.shifts().mu_hi)` without the intermediate vectors.
    fn near_shift_sweep(&mut self) {
        let a = self.active_dim;
        self.for_each_matrix(|_, d, e, q| {
            let (_, mu_hi) = wilkinson(d[a - 2], e[a - 2], d[a - 1]);
            sweep_matrix(d, e, a, mu_hi, q);
        });
        self.rotation_count += a - 1;
        self.sweeps += 1;
        self.bump_bandwidth(1);
    }

    /// Shrinks the active block while every matrix's trailing off-diagonal
    /// is strictly below `eps · ‖T‖_F`, stopping at size 2.
    pub fn try_deflate(&mut self, eps: f64) {
        while self.active_dim > 2 && self.trailing_offdiag_rel_max() < eps {
            let m = self.dim - 1;
            let slot = self.active_dim - 2;
            for k in 0..self.batch {
                self.offdiag[k * m + slot] = 0.0;
            }
            self.active_dim -= 1;
            self.reductions += 1;
        }
    }

    /// Closes out an active block of size ≤ 2 in closed form.
    pub fn finalize_small(&mut self) {
        assert!(self.active_dim <= 2, "finalize_small needs an active block of at most 2");
        if self.active_dim == 2 {
            let n = self.dim;
            let rows = q_rows(n, 0, self.q_bandwidth);
            for k in 0..self.batch {
                let d = &mut self.diag[k * n..(k + 1) * n];
                let e = &mut self.offdiag[k * (n - 1)];
                let (c, s, l0, l1) = symmetric_2x2(d[0], *e, d[1]);
                d[0] = l0;
                d[1] = l1;
                *e = 0.0;
                if let Some(q) = self.q.as_mut() {
                    rotate_columns(q.matrix_mut(k), n, 0, c, s, rows);
                }
            }
            self.bump_bandwidth(1);
        }
        self.active_dim = 0;
    }
}

/// Counters reported with every solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Double-shift steps taken (`k`).
    pub double_steps: usize,
    /// Shrink events issued by the deflation gate.
    pub reductions: usize,
    /// Average shrink count over the double steps (`r` of the cost model).
    pub mean_reductions: f64,
    /// Givens rotations generated by sweeps, per matrix.
    pub rotation_count: usize,
}

/// Eigenvalues in deflation order plus the accumulated rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization {
    pub batch: usize,
    pub dim: usize,
    /// `batch × dim`, unsorted.
    pub eigenvalues: Vec<f64>,
    /// `Q_0 … Q_k`, present when vectors were requested.
    pub q: Option<BatchedMatrix>,
    pub diagnostics: Diagnostics,
}

/// Double-shift QR loop with progressive shrinkage, then the closed-form
/// closeout of the last `2 × 2` block.
pub fn diagonalize(t: &TridiagonalBatch, cfg: &SolverConfig) -> Result<Diagonalization> {
    cfg.check(t.dim)?;
    let state = run_to_convergence(SweepState::new(t, cfg.compute_vectors), cfg)?;
    Ok(Diagonalization {
        batch: state.batch,
        dim: state.dim,
        diagnostics: Diagnostics {
            double_steps: state.double_steps,
            reductions: state.reductions,
            mean_reductions: state.mean_reductions(),
            rotation_count: state.rotation_count,
        },
        eigenvalues: state.diag,
        q: state.q,
    })
}

/// Drives `state` to a fully locked spectrum.
pub fn run_to_convergence(mut state: SweepState, cfg: &SolverConfig) -> Result<SweepState> {
    let eps = cfg.deflation_tol;
    let max_steps = cfg.max_double_steps_for(state.dim);
    state.try_deflate(eps);
    while state.active_dim > 2 {
        if state.double_steps >= max_steps {
            let m = state.dim - 1;
            let slot = state.active_dim - 2;
            let batch_indices = (0..state.batch)
                .filter(|&k| state.offdiag[k * m + slot].abs() >= eps * state.scale[k])
                .collect();
            return Err(Error::NoConvergence {
                batch_indices,
                residual_offdiag_max: state.trailing_offdiag_rel_max(),
            });
        }
        state.gated_double_step(eps);
        state.try_deflate(eps);
    }
    state.finalize_small();
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_rotation() {
        let (c, s) = givens(3.0, 4.0);
        assert_eq!((c, s), (0.6, -0.8));
        assert!((c * 3.0 - s * 4.0 - 5.0).abs() < 1e-15);
        assert!((s * 3.0 + c * 4.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_rotations() {
        assert_eq!(givens(2.5, 0.0), (1.0, 0.0));
        assert_eq!(givens(0.0, 0.0), (1.0, 0.0));
        let g = givens_coeffs(&[3.0, 0.0], &[4.0, 0.0], 1);
        assert_eq!(g.c, vec![0.6, 1.0]);
        assert_eq!(g.position, 1);
    }

    #[test]
    fn subnormal_inputs_stay_orthonormal() {
        let (c, s) = givens(3e-310, -4e-310);
        assert!((c * c + s * s - 1.0).abs() < 1e-15);
        assert!((c - 0.6).abs() < 1e-12 && (s - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gated_step_keeps_a_split_block() {
        // trailing 2×2 already decoupled from the rest
        let t = TridiagonalBatch::new(1, 4, vec![4.0, 3.0, 2.0, 1.0], vec![0.5, 1e-20, 0.3]).unwrap();
        let mut st = SweepState::new(&t, false);
        st.gated_double_step(1e-13);
        st.try_deflate(1e-13);
        assert!(st.active_dim <= 3);
        let mut literal = SweepState::new(&t, false);
        literal.double_shift_step();
        assert!(literal.offdiag[2].abs() > 1e-3, "frozen shifts undo the split");
    }

    #[test]
    fn relative_gate() {
        let t = TridiagonalBatch::new(1, 3, vec![1e6, 2e6, 3e6], vec![1.0, 1e-8]).unwrap();
        let mut st = SweepState::new(&t, false);
        st.try_deflate(1e-13);
        assert_eq!(st.active_dim, 2);
    }

    #[test]
    fn shift_pairs() {
        let (lo, hi) = wilkinson(2.0, 1.0, 2.0);
        let mut pair = [lo, hi];
        pair.sort_by(f64::total_cmp);
        assert!((pair[0] - 1.0).abs() < 1e-15 && (pair[1] - 3.0).abs() < 1e-15);
        assert_eq!(wilkinson(4.0, 0.0, 9.0), (4.0, 9.0));
        let (lo, hi) = wilkinson(5.0, 2.0, 1.0);
        let root = 2.0 * 2f64.sqrt();
        assert!((hi - (3.0 - root)).abs() < 1e-14, "closer to d = 1");
        assert!((lo - (3.0 + root)).abs() < 1e-14);
    }

    #[test]
    fn exact_shift_splits_a_2x2_in_one_sweep() {
        let mut d = vec![2.0, 2.0];
        let mut e = vec![1.0];
        sweep_matrix(&mut d, &mut e, 2, 1.0, None);
        assert!(e[0].abs() <= 1e-15);
        assert!((d[0] - 3.0).abs() < 1e-15 && (d[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_sweep_is_identity() {
        let mut d = vec![1.0, 2.0, 3.0];
        let mut e = vec![0.0, 0.0];
        let mut q = crate::dense::identity(3);
        sweep_matrix(&mut d, &mut e, 3, 0.0, Some((&mut q, 0)));
        assert_eq!(d, vec![1.0, 2.0, 3.0]);
        assert_eq!(e, vec![0.0, 0.0]);
        assert_eq!(q, crate::dense::identity(3));
    }

    #[test]
    fn embedded_rotation() {
        let mut q = BatchedMatrix::identity(1, 3);
        let g = GivensCoeffs {
            c: vec![0.6],
            s: vec![-0.8],
            position: 0,
        };
        economic_q_update(&mut q, &g, 3);
        assert_eq!(q.matrix(0), &[0.6, -0.8, 0.0, 0.8, 0.6, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn batch_wide_gate() {
        let t = TridiagonalBatch::new(2, 3, vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0], vec![0.5, 1e-9, 0.5, 1e-2]).unwrap();
        let mut st = SweepState::new(&t, false);
        st.try_deflate(1e-5);
        assert_eq!(st.active_dim, 3);
        assert_eq!(st.reductions, 0);
    }

    #[test]
    fn zero_offdiagonals_shrink_to_two() {
        let t = TridiagonalBatch::new(1, 5, vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.0; 4]).unwrap();
        let mut st = SweepState::new(&t, false);
        st.try_deflate(1e-5);
        assert_eq!(st.active_dim, 2);
        assert_eq!(st.reductions, 3);
        assert_eq!(st.locked(0), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn closeout_of_small_blocks() {
        let t = TridiagonalBatch::new(1, 2, vec![2.0, 2.0], vec![1.0]).unwrap();
        let mut st = SweepState::new(&t, true);
        st.finalize_small();
        let mut vals = st.diag.clone();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0).abs() < 1e-15 && (vals[1] - 3.0).abs() < 1e-15);
        let q = st.q.unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for x in q.matrix(0) {
            assert!((x.abs() - h).abs() < 1e-15);
        }

        let t = TridiagonalBatch::new(1, 1, vec![5.0], vec![]).unwrap();
        let mut st = SweepState::new(&t, true);
        st.finalize_small();
        assert_eq!(st.diag, vec![5.0]);
        assert_eq!(st.active_dim, 0);

        let t = TridiagonalBatch::new(1, 2, vec![5.0, 1.0], vec![2.0]).unwrap();
        let mut st = SweepState::new(&t, false);
        st.finalize_small();
        let root = 2.0 * 2f64.sqrt();
        assert!((st.diag[0] - (3.0 + root)).abs() < 1e-14);
        assert!((st.diag[1] - (3.0 - root)).abs() < 1e-14);
    }

    #[test]
    fn diagonal_input_needs_no_rotations() {
        let t = TridiagonalBatch::new(1, 3, vec![3.0, 1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let out = diagonalize(&t, &SolverConfig::default()).unwrap();
        assert_eq!(out.eigenvalues, vec![3.0, 1.0, 2.0]);
        assert_eq!(out.q.unwrap(), BatchedMatrix::identity(1, 3));
        assert_eq!(out.diagnostics.rotation_count, 0);
    }

    #[test]
    fn exhausted_budget_reports_offenders() {
        let t = TridiagonalBatch::new(1, 6, vec![4.0, 3.0, 2.0, 1.0, 0.5, 0.25], vec![1.0; 5]).unwrap();
        let cfg = SolverConfig {
            deflation_tol: 0.0,
            max_double_steps: Some(2),
            ..SolverConfig::default()
        };
        match diagonalize(&t, &cfg) {
            Err(Error::NoConvergence { batch_indices, .. }) => assert_eq!(batch_indices, vec![0]),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
