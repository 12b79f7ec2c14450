//! Small dense kernels over single row-major `n × n` (or `r × c`) slices.
//!
//! These are the building blocks shared by the solver facade, the random
//! generators and the verification code. Nothing here is batched.

/// `c = a · b` with `a: m × k`, `b: k × n`, all row-major.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cij, bpj) in row.iter_mut().zip(brow) {
                *cij += aip * bpj;
            }
        }
    }
    c
}

/// `c = aᵀ · b` with `a: k × m`, `b: k × n`.
pub fn matmul_tn(a: &[f64], b: &[f64], k: usize, m: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for p in 0..k {
        let arow = &a[p * m..(p + 1) * m];
        let brow = &b[p * n..(p + 1) * n];
        for (i, &api) in arow.iter().enumerate() {
            if api == 0.0 {
                continue;
            }
            let row = &mut c[i * n..(i + 1) * n];
            for (cij, bpj) in row.iter_mut().zip(brow) {
                *cij += api * bpj;
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn trace(a: &[f64], n: usize) -> f64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

/// `‖aᵀa − I‖_F` for a square `n × n` matrix.
pub fn orthogonality_defect(a: &[f64], n: usize) -> f64 {
    let g = matmul_tn(a, a, n, n, n);
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = g[i * n + j] - target;
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// `v · diag(values) · vᵀ`.
pub fn reconstruct(v: &[f64], values: &[f64], n: usize) -> Vec<f64> {
    let mut scaled = v.to_vec();
    for i in 0..n {
        for j in 0..n {
            scaled[i * n + j] *= values[j];
        }
    }
    let vt = transpose(v, n, n);
    matmul(&scaled, &vt, n, n, n)
}

/// Largest elementwise absolute difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
