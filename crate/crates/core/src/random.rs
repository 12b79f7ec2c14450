//! Seeded random test matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::householder::rank2_update_in_place;
use crate::tensor::{BatchedMatrix, BatchedSymmetric};

/// `batch` SPD matrices `QDQᵀ` of size `dim`.
///
/// `Q` is a product of `dim` Householder reflectors with Gaussian vectors and
/// `D` holds eigenvalues `s · 10^(−decades·U)` with `U ~ U[0, 1)` and a
/// per-matrix scale `s ∈ [1, 10)`, so `λ_max / λ_min ≤ 10^decades`. The
/// output depends only on `(batch, dim, seed, decades)`.
pub fn gen_spd(batch: usize, dim: usize, seed: u64, decades: f64) -> BatchedSymmetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(batch * dim * dim);
    for _ in 0..batch {
        let scale = rng.random_range(1.0..10.0);
        let spectrum: Vec<f64> = (0..dim)
            .map(|_| {
                let u: f64 = rng.random();
                scale * 10f64.powf(-decades * u)
            })
            .collect();
        data.extend(rotate_spectrum(&spectrum, &mut rng));
    }
    let m = BatchedMatrix::new(batch, dim, dim, data).expect("finite spectrum");
    BatchedSymmetric::from_symmetric_unchecked(m)
}

/// `batch` symmetric matrices with the given spectra (one row per matrix),
/// rotated by seeded random orthogonal factors.
pub fn with_spectra(dim: usize, spectra: &[Vec<f64>], seed: u64) -> BatchedSymmetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = spectra
        .iter()
        .flat_map(|s| {
            assert_eq!(s.len(), dim, "spectrum length must equal dim");
            rotate_spectrum(s, &mut rng)
        })
        .collect();
    let m = BatchedMatrix::new(spectra.len(), dim, dim, data).expect("finite spectrum");
    BatchedSymmetric::from_symmetric_unchecked(m)
}

/// A random orthogonal `dim × dim` matrix (product of `dim` reflectors).
pub fn random_orthogonal(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = crate::dense::identity(dim);
    let mut u = vec![0.0; dim];
    for _ in 0..dim {
        let beta = fill_gaussian(&mut u, &mut rng);
        if beta == 0.0 {
            continue;
        }
        // Q ← Q H
        for row in q.chunks_exact_mut(dim) {
            let dot: f64 = row.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>() * 2.0 / beta;
            row.iter_mut().zip(&u).for_each(|(x, y)| *x -= dot * y);
        }
    }
    q
}

fn fill_gaussian(u: &mut [f64], rng: &mut ChaCha8Rng) -> f64 {
    for x in u.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    u.iter().map(|x| x * x).sum()
}

fn rotate_spectrum(spectrum: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = spectrum.len();
    let mut a = vec![0.0; n * n];
    for (i, &l) in spectrum.iter().enumerate() {
        a[i * n + i] = l;
    }
    let mut u = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..n {
        let beta = fill_gaussian(&mut u, rng);
        rank2_update_in_place(&mut a, n, &u, beta, &mut p);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mid = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = mid;
            a[j * n + i] = mid;
        }
    }
    a
}
