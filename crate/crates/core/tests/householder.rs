use batched_eig::dense::{frobenius, identity, matmul, max_abs_diff, orthogonality_defect, trace};
use batched_eig::householder::{
    accumulate_reflectors, householder_vector, rank2_update, reduce_dense, tridiagonalize, wy_accumulate,
};
use batched_eig::oracle::jacobi_eig;
use batched_eig::{gen_spd, BatchedSymmetric, SolverConfig, WyBlock};

fn reflector(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let beta: f64 = u.iter().map(|x| x * x).sum();
    let mut h = identity(n);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] -= 2.0 * u[i] * u[j] / beta;
        }
    }
    h
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn rank_two_update_matches_explicit_product() {
    for seed in 0..20 {
        let n = 3 + (seed as usize % 8);
        let a = gen_spd(3, n, seed, 2.0);
        let (u, _) = householder_vector(&a, 0);
        let out = rank2_update(&a, &u);
        for k in 0..3 {
            let h = reflector(&u[k * n..(k + 1) * n]);
            let hah = matmul(&matmul(&h, a.matrix(k), n, n, n), &h, n, n, n);
            let tol = 1e-13 * frobenius(a.matrix(k));
            assert!(max_abs_diff(out.matrix(k), &hah) <= tol, "seed {seed} matrix {k}");
        }
    }
}

#[test]
fn all_ones_reduces_to_known_band() {
    let a = BatchedSymmetric::new(1, 4, vec![1.0; 16]).unwrap();
    let (t, _) = tridiagonalize(&a, &SolverConfig::default()).unwrap();
    let d = t.diag_of(0);
    let e = t.offdiag_of(0);
    let s3 = 3f64.sqrt();
    let expect_d = [1.0, 3.0, 0.0, 0.0];
    for (x, y) in d.iter().zip(expect_d) {
        assert!((x - y).abs() < 1e-14, "diag {d:?}");
    }
    assert!((e[0].abs() - s3).abs() < 1e-14, "offdiag {e:?}");
    assert!(e[1].abs() < 1e-14 && e[2].abs() < 1e-14);
}

#[test]
fn tridiagonal_keeps_the_spectrum() {
    let a = gen_spd(16, 8, 42, 3.0);
    let (t, _) = tridiagonalize(&a, &SolverConfig::default()).unwrap();
    for k in 0..16 {
        let (va, _) = jacobi_eig(a.matrix(k), 8, 1e-14).unwrap();
        let (vt, _) = jacobi_eig(&t.dense_matrix(k), 8, 1e-14).unwrap();
        let err = max_abs_diff(&sorted(va), &sorted(vt));
        assert!(err <= 1e-10, "matrix {k}: {err:e}");
    }
}

#[test]
fn band_exterior_vanishes() {
    for n in [3, 5, 9, 17, 32] {
        let a = gen_spd(4, n, n as u64, 3.0);
        let (dense, _) = reduce_dense(&a);
        for k in 0..4 {
            let m = dense.matrix(k);
            let tol = 1e-12 * frobenius(a.matrix(k));
            for i in 0..n {
                for j in 0..n {
                    if i.abs_diff(j) > 1 {
                        assert!(m[i * n + j].abs() <= tol, "n {n} ({i},{j}) = {:e}", m[i * n + j]);
                    }
                }
            }
        }
    }
}

#[test]
fn trace_and_norm_preserved() {
    let a = gen_spd(8, 12, 3, 3.0);
    let (t, _) = tridiagonalize(&a, &SolverConfig::default()).unwrap();
    for k in 0..8 {
        let tk = t.dense_matrix(k);
        let ak = a.matrix(k);
        assert!((trace(&tk, 12) - trace(ak, 12)).abs() <= 1e-12 * trace(ak, 12).abs());
        assert!((frobenius(&tk) - frobenius(ak)).abs() <= 1e-12 * frobenius(ak));
    }
}

#[test]
fn transform_reproduces_input() {
    for (n, wy) in [(6, WyBlock::Disabled), (20, WyBlock::Block(4)), (20, WyBlock::Block(7))] {
        let a = gen_spd(5, n, 9, 2.0);
        let cfg = SolverConfig {
            wy_block: wy,
            ..SolverConfig::default()
        };
        let (t, _) = tridiagonalize(&a, &cfg).unwrap();
        let p = t.transform.as_ref().unwrap();
        for k in 0..5 {
            let pk = p.matrix(k);
            assert!(orthogonality_defect(pk, n) <= 1e-13 * n as f64);
            let pt = batched_eig::dense::transpose(pk, n, n);
            let back = matmul(&matmul(pk, &t.dense_matrix(k), n, n, n), &pt, n, n, n);
            assert!(max_abs_diff(&back, a.matrix(k)) <= 1e-12 * frobenius(a.matrix(k)));
        }
    }
}

#[test]
fn reflectors_are_orthogonal_involutions() {
    let a = gen_spd(2, 7, 5, 1.0);
    let (_, r) = tridiagonalize(&a, &SolverConfig::values_only()).unwrap();
    for step in 0..r.steps() {
        for k in 0..2 {
            let h = r.reflector_matrix(step, k);
            let hh = matmul(&h, &h, 7, 7, 7);
            assert!(max_abs_diff(&hh, &identity(7)) <= 1e-14);
        }
    }
}

#[test]
fn wy_blocks_match_naive_product() {
    for n in [10, 12] {
        let a = gen_spd(3, n, n as u64 + 100, 3.0);
        let (_, r) = tridiagonalize(&a, &SolverConfig::values_only()).unwrap();
        let naive = accumulate_reflectors(&r);
        for m in 1..=n - 2 {
            let wy = wy_accumulate(&r, m).unwrap();
            let err = max_abs_diff(wy.data(), naive.data());
            assert!(err <= 1e-12, "n {n} m {m}: {err:e}");
        }
    }
}

#[test]
fn batch_members_are_independent() {
    let a = gen_spd(6, 9, 77, 3.0);
    let (t, _) = tridiagonalize(&a, &SolverConfig::default()).unwrap();
    for k in 0..6 {
        let one = a.slice(k..k + 1);
        let (tk, _) = tridiagonalize(&one, &SolverConfig::default()).unwrap();
        assert_eq!(tk.diag_of(0), t.diag_of(k));
        assert_eq!(tk.offdiag_of(0), t.offdiag_of(k));
        assert_eq!(tk.transform.unwrap().matrix(0), t.transform.as_ref().unwrap().matrix(k));
    }
}

#[test]
fn tiny_dimensions_pass_through() {
    let a = BatchedSymmetric::new(1, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
    let (t, r) = tridiagonalize(&a, &SolverConfig::default()).unwrap();
    assert_eq!(r.steps(), 0);
    assert_eq!(t.diag_of(0), &[2.0, 3.0]);
    assert_eq!(t.offdiag_of(0), &[1.0]);
    assert_eq!(t.transform.unwrap().matrix(0), identity(2).as_slice());
}
