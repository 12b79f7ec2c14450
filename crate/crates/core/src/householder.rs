//! Householder tridiagonalization.
//!
//! Each of the `n − 2` steps builds a reflector `H = I − 2uuᵀ/‖u‖²` that
//! clears one column below the sub-diagonal and applies it as a symmetric
//! rank-2 update, never as a matrix-matrix product. The orthogonal factor
//! `P = H_0 H_1 … H_{n−3}` can be accumulated one reflector at a time or in
//! blocks through the compact WY form `I − 2WYᵀ`.

use crate::batch;
use crate::config::SolverConfig;
use crate::dense;
use crate::error::{Error, Result};
use crate::tensor::{BatchedMatrix, BatchedSymmetric};

/// Column tails with a norm at or below this are treated as already reduced.
pub const ZERO_TAIL: f64 = 1e-300;

/// The reflectors produced by [`tridiagonalize`], stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorSet {
    batch: usize,
    dim: usize,
    vectors: Vec<f64>,
    norms: Vec<f64>,
}

impl ReflectorSet {
    pub fn empty(batch: usize, dim: usize) -> Self {
        Self {
            batch,
            dim,
            vectors: Vec::new(),
            norms: Vec::new(),
        }
    }

    /// Builds a set from per-step vectors laid out `steps × batch × dim`.
    pub fn from_vectors(batch: usize, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if batch == 0 || vectors.len() % (batch * dim.max(1)) != 0 {
            return Err(Error::DimMismatch(format!(
                "{} reflector entries do not split into batch {batch} x dim {dim}",
                vectors.len()
            )));
        }
        let norms = vectors
            .chunks_exact(dim)
            .map(|u| u.iter().map(|x| x * x).sum())
            .collect();
        Ok(Self {
            batch,
            dim,
            vectors,
            norms,
        })
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of reflectors per matrix.
    pub fn steps(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.vectors.len() / (self.batch * self.dim)
        }
    }

    pub fn vector(&self, step: usize, k: usize) -> &[f64] {
        let off = (step * self.batch + k) * self.dim;
        &self.vectors[off..off + self.dim]
    }

    /// Cached `‖u‖²` of reflector `step` for matrix `k`.
    pub fn norm_sq(&self, step: usize, k: usize) -> f64 {
        self.norms[step * self.batch + k]
    }

    /// The explicit `dim × dim` reflector `I − 2uuᵀ/‖u‖²`.
    pub fn reflector_matrix(&self, step: usize, k: usize) -> Vec<f64> {
        let n = self.dim;
        let u = self.vector(step, k);
        let beta = self.norm_sq(step, k);
        let mut h = dense::identity(n);
        if beta > 0.0 {
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] -= 2.0 * u[i] * u[j] / beta;
                }
            }
        }
        h
    }
}

/// Compact tridiagonal form `T = PᵀAP` of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalBatch {
    pub batch: usize,
    pub dim: usize,
    /// `batch × dim` main diagonals.
    pub diag: Vec<f64>,
    /// `batch × (dim − 1)` sub-diagonals (`t[i+1][i] = t[i][i+1]`).
    pub offdiag: Vec<f64>,
    /// The accumulated orthogonal factor `P`, when requested.
    pub transform: Option<BatchedMatrix>,
}

impl TridiagonalBatch {
    pub fn new(batch: usize, dim: usize, diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if batch == 0 || dim == 0 {
            return Err(Error::DimMismatch("empty tridiagonal batch".into()));
        }
        if diag.len() != batch * dim || offdiag.len() != batch * (dim - 1) {
            return Err(Error::DimMismatch(format!(
                "tridiagonal batch {batch}x{dim} needs {} diagonal and {} off-diagonal entries",
                batch * dim,
                batch * (dim - 1)
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                batch_index: 0,
                position: (0, 0),
            });
        }
        Ok(Self {
            batch,
            dim,
            diag,
            offdiag,
            transform: None,
        })
    }

    pub fn diag_of(&self, k: usize) -> &[f64] {
        &self.diag[k * self.dim..(k + 1) * self.dim]
    }

    pub fn offdiag_of(&self, k: usize) -> &[f64] {
        let m = self.dim - 1;
        &self.offdiag[k * m..(k + 1) * m]
    }

    /// Expands matrix `k` back to a dense symmetric `dim × dim` array.
    pub fn dense_matrix(&self, k: usize) -> Vec<f64> {
        let n = self.dim;
        let mut t = vec![0.0; n * n];
        for (i, &d) in self.diag_of(k).iter().enumerate() {
            t[i * n + i] = d;
        }
        for (i, &e) in self.offdiag_of(k).iter().enumerate() {
            t[(i + 1) * n + i] = e;
            t[i * n + i + 1] = e;
        }
        t
    }

    pub fn to_dense(&self) -> BatchedSymmetric {
        let data = (0..self.batch).flat_map(|k| self.dense_matrix(k)).collect();
        BatchedSymmetric::from_symmetric_unchecked(
            BatchedMatrix::new(self.batch, self.dim, self.dim, data).expect("finite by construction"),
        )
    }
}

/// Fills `u` with the reflector clearing column `step` of `a` below its
/// sub-diagonal and returns `(σ, ‖u‖²)`.
///
/// `u` is zero in entries `0..=step`. A column that is already reduced gives
/// `u = 0`, i.e. `H = I`.
pub fn reflector_into(a: &[f64], n: usize, step: usize, u: &mut [f64]) -> (f64, f64) {
    u.fill(0.0);
    if step + 2 > n {
        return (0.0, 0.0);
    }
    let below: f64 = (step + 2..n).map(|r| a[r * n + step].powi(2)).sum();
    if below.sqrt() <= ZERO_TAIL {
        return (0.0, 0.0);
    }
    let alpha = a[(step + 1) * n + step];
    let norm = (alpha * alpha + below).sqrt();
    let sigma = if alpha >= 0.0 { norm } else { -norm };
    u[step + 1] = alpha + sigma;
    for r in step + 2..n {
        u[r] = a[r * n + step];
    }
    let norm_sq = u.iter().map(|x| x * x).sum();
    (sigma, norm_sq)
}

/// `a ← H a H` via `p = 2au/β`, `K = uᵀp/β`, `q = p − Ku`, `a ← a − quᵀ − uqᵀ`.
///
/// `p` is scratch of length `n`. A zero `norm_sq` leaves `a` untouched.
pub fn rank2_update_in_place(a: &mut [f64], n: usize, u: &[f64], norm_sq: f64, p: &mut [f64]) {
    if norm_sq == 0.0 {
        return;
    }
    let Some(first) = u.iter().position(|&x| x != 0.0) else {
        return;
    };
    for (i, pi) in p.iter_mut().enumerate() {
        let row = &a[i * n..(i + 1) * n];
        let dot: f64 = row[first..].iter().zip(&u[first..]).map(|(x, y)| x * y).sum();
        *pi = 2.0 * dot / norm_sq;
    }
    let k = u[first..].iter().zip(&p[first..]).map(|(x, y)| x * y).sum::<f64>() / norm_sq;
    for (pi, ui) in p.iter_mut().zip(u) {
        *pi -= k * ui;
    }
    let q = p;
    for i in 0..n {
        let (qi, ui) = (q[i], u[i]);
        let row = &mut a[i * n..(i + 1) * n];
        if ui == 0.0 {
            if qi == 0.0 {
                continue;
            }
            for j in first..n {
                row[j] -= qi * u[j];
            }
        } else {
            for j in 0..n {
                row[j] -= qi * u[j] + ui * q[j];
            }
        }
    }
}

/// Batched reflector for `step` of an (already partially reduced) batch.
pub fn householder_vector(a: &BatchedSymmetric, step: usize) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let mut u = vec![0.0; a.batch() * n];
    let mut sigma = vec![0.0; a.batch()];
    for k in 0..a.batch() {
        let (s, _) = reflector_into(a.matrix(k), n, step, &mut u[k * n..(k + 1) * n]);
        sigma[k] = s;
    }
    (u, sigma)
}

/// Batched two-sided reflection `H A H`, one reflector per matrix.
pub fn rank2_update(a: &BatchedSymmetric, u: &[f64]) -> BatchedSymmetric {
    let n = a.dim();
    assert_eq!(u.len(), a.batch() * n, "one reflector per matrix");
    let mut out = a.clone().into_matrix();
    let mut p = vec![0.0; n];
    for k in 0..a.batch() {
        let uk = &u[k * n..(k + 1) * n];
        let beta = uk.iter().map(|x| x * x).sum();
        rank2_update_in_place(out.matrix_mut(k), n, uk, beta, &mut p);
    }
    symmetrize(&mut out);
    BatchedSymmetric::from_symmetric_unchecked(out)
}

fn symmetrize(m: &mut BatchedMatrix) {
    let n = m.rows();
    for k in 0..m.batch() {
        let a = m.matrix_mut(k);
        for i in 0..n {
            for j in i + 1..n {
                let mid = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = mid;
                a[j * n + i] = mid;
            }
        }
    }
}

/// Reduces one matrix in place; returns its `n − 2` reflectors back to back.
fn reduce_one(a: &mut [f64], n: usize) -> Vec<f64> {
    let steps = n.saturating_sub(2);
    let mut vectors = vec![0.0; steps * n];
    let mut p = vec![0.0; n];
    for step in 0..steps {
        let u = &mut vectors[step * n..(step + 1) * n];
        let (_, beta) = reflector_into(a, n, step, u);
        rank2_update_in_place(a, n, u, beta, &mut p);
    }
    vectors
}

/// Applies all `n − 2` reflections and returns the dense reduced batch
/// (band exterior not yet cleared) together with the reflectors.
pub fn reduce_dense(a: &BatchedSymmetric) -> (BatchedMatrix, ReflectorSet) {
    let (b, n) = (a.batch(), a.dim());
    let parallel = batch::worth_parallel(b, n);
    let per: Vec<(Vec<f64>, Vec<f64>)> = batch::map(b, parallel, |k| {
        let mut m = a.matrix(k).to_vec();
        let v = reduce_one(&mut m, n);
        (m, v)
    });
    let steps = n.saturating_sub(2);
    let mut vectors = vec![0.0; steps * b * n];
    let mut dense = Vec::with_capacity(b * n * n);
    for (k, (m, v)) in per.into_iter().enumerate() {
        dense.extend_from_slice(&m);
        for step in 0..steps {
            let dst = (step * b + k) * n;
            vectors[dst..dst + n].copy_from_slice(&v[step * n..(step + 1) * n]);
        }
    }
    let reflectors = if steps == 0 {
        ReflectorSet::empty(b, n)
    } else {
        ReflectorSet::from_vectors(b, n, vectors).expect("shape by construction")
    };
    let dense = BatchedMatrix::new(b, n, n, dense).expect("orthogonal similarity keeps entries finite");
    (dense, reflectors)
}

/// Tridiagonalizes a batch. When `cfg.compute_vectors` is set the transform
/// `P` is accumulated (through WY blocks if `cfg.wy_block` resolves to one).
pub fn tridiagonalize(
    a: &BatchedSymmetric,
    cfg: &SolverConfig,
) -> Result<(TridiagonalBatch, ReflectorSet)> {
    cfg.check(a.dim())?;
    let (b, n) = (a.batch(), a.dim());
    let (dense, reflectors) = reduce_dense(a);
    let mut diag = Vec::with_capacity(b * n);
    let mut offdiag = Vec::with_capacity(b * (n - 1));
    for m in dense.matrices() {
        diag.extend((0..n).map(|i| m[i * n + i]));
        offdiag.extend((0..n - 1).map(|i| 0.5 * (m[(i + 1) * n + i] + m[i * n + i + 1])));
    }
    let mut t = TridiagonalBatch::new(b, n, diag, offdiag)?;
    if cfg.compute_vectors {
        let p = match cfg.wy_block.resolve(n) {
            Some(m) if reflectors.steps() > 0 => wy_accumulate(&reflectors, m)?,
            _ => accumulate_reflectors(&reflectors),
        };
        t.transform = Some(p);
    }
    Ok((t, reflectors))
}

/// `P = H_0 H_1 … H_{n−3}`, one reflector at a time.
pub fn accumulate_reflectors(r: &ReflectorSet) -> BatchedMatrix {
    let (b, n) = (r.batch(), r.dim());
    let mut out = BatchedMatrix::identity(b, n);
    let parallel = batch::worth_parallel(b, n);
    let items: Vec<&mut [f64]> = out.data_mut().chunks_exact_mut(n * n).collect();
    batch::for_each(items, parallel, |k, p| {
        let mut pu = vec![0.0; n];
        for step in 0..r.steps() {
            let beta = r.norm_sq(step, k);
            if beta == 0.0 {
                continue;
            }
            let u = r.vector(step, k);
            for (i, v) in pu.iter_mut().enumerate() {
                *v = p[i * n..(i + 1) * n].iter().zip(u).map(|(x, y)| x * y).sum::<f64>() * 2.0 / beta;
            }
            for i in 0..n {
                let row = &mut p[i * n..(i + 1) * n];
                for (x, uj) in row.iter_mut().zip(u) {
                    *x -= pu[i] * uj;
                }
            }
        }
    });
    out
}

/// `W`, `Y` (each `dim × block` per matrix) with `I − 2WYᵀ` equal to the
/// product of one run of consecutive reflectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WyFactors {
    pub batch: usize,
    pub dim: usize,
    pub block: usize,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
}

impl WyFactors {
    pub fn w_of(&self, k: usize) -> &[f64] {
        let per = self.dim * self.block;
        &self.w[k * per..(k + 1) * per]
    }

    pub fn y_of(&self, k: usize) -> &[f64] {
        let per = self.dim * self.block;
        &self.y[k * per..(k + 1) * per]
    }

    /// Dense `I − 2WYᵀ` for every matrix.
    pub fn product(&self) -> BatchedMatrix {
        let n = self.dim;
        let mut out = BatchedMatrix::identity(self.batch, n);
        for k in 0..self.batch {
            let wyt = dense::matmul(self.w_of(k), &dense::transpose(self.y_of(k), n, self.block), n, self.block, n);
            for (x, v) in out.matrix_mut(k).iter_mut().zip(wyt) {
                *x -= 2.0 * v;
            }
        }
        out
    }
}

/// Forms the WY factors of reflectors `start .. start + len`.
pub fn wy_factors(r: &ReflectorSet, start: usize, len: usize) -> WyFactors {
    let (b, n) = (r.batch(), r.dim());
    let mut w = vec![0.0; b * n * len];
    let mut y = vec![0.0; b * n * len];
    for k in 0..b {
        let wk = &mut w[k * n * len..(k + 1) * n * len];
        let yk = &mut y[k * n * len..(k + 1) * n * len];
        for (col, step) in (start..start + len).enumerate() {
            let beta = r.norm_sq(step, k);
            if beta == 0.0 {
                continue;
            }
            let scale = beta.sqrt().recip();
            let v: Vec<f64> = r.vector(step, k).iter().map(|x| x * scale).collect();
            // z = (I − 2WYᵀ) v over the columns built so far
            let mut ytv = vec![0.0; col];
            for (j, t) in ytv.iter_mut().enumerate() {
                *t = (0..n).map(|i| yk[i * len + j] * v[i]).sum();
            }
            for i in 0..n {
                let wv: f64 = (0..col).map(|j| wk[i * len + j] * ytv[j]).sum();
                wk[i * len + col] = v[i] - 2.0 * wv;
                yk[i * len + col] = v[i];
            }
        }
    }
    WyFactors {
        batch: b,
        dim: n,
        block: len,
        w,
        y,
    }
}

/// Accumulates `P` from WY blocks of `m` reflectors.
pub fn wy_accumulate(r: &ReflectorSet, m: usize) -> Result<BatchedMatrix> {
    let steps = r.steps();
    if m == 0 || m > steps {
        return Err(Error::BlockTooLarge { block: m, max: steps });
    }
    let (b, n) = (r.batch(), r.dim());
    let blocks: Vec<WyFactors> = (0..steps)
        .step_by(m)
        .map(|start| wy_factors(r, start, m.min(steps - start)))
        .collect();
    let mut out = BatchedMatrix::identity(b, n);
    for f in &blocks {
        for k in 0..b {
            let p = out.matrix_mut(k);
            let pw = dense::matmul(p, f.w_of(k), n, n, f.block);
            let yt = dense::transpose(f.y_of(k), n, f.block);
            let update = dense::matmul(&pw, &yt, n, f.block, n);
            for (x, v) in p.iter_mut().zip(update) {
                *x -= 2.0 * v;
            }
        }
    }
    Ok(out)
}
