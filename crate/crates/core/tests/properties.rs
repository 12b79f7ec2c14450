use batched_eig::dense::{frobenius, max_abs_diff, orthogonality_defect, reconstruct, trace};
use batched_eig::householder::tridiagonalize;
use batched_eig::oracle::{jacobi_eig, windowed_discrepancy};
use batched_eig::qr::{givens, sweep_matrix, wilkinson};
use batched_eig::{batched_eig, gen_spd, SolverConfig, SweepState, TridiagonalBatch};
use proptest::prelude::*;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn tridiagonal(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-5.0..5.0f64, n - 1),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn givens_annihilates(x1 in -1e3..1e3f64, x2 in -1e3..1e3f64) {
        let (c, s) = givens(x1, x2);
        prop_assert!((c * c + s * s - 1.0).abs() <= 1e-14);
        let r = x1.hypot(x2);
        prop_assert!((c * x1 - s * x2 - r).abs() <= 1e-14 * r.max(1e-300));
        prop_assert!((s * x1 + c * x2).abs() <= 1e-14 * r.max(1e-300));
    }

    #[test]
    fn shifts_are_the_block_eigenvalues(a in -10.0..10.0f64, b in -10.0..10.0f64, d in -10.0..10.0f64) {
        let (lo, hi) = wilkinson(a, b, d);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let norm = (a * a + 2.0 * b * b + d * d).sqrt().max(1.0);
        let got = sorted(vec![lo, hi]);
        prop_assert!((got[0] - (mid - rad)).abs() <= 1e-13 * norm);
        prop_assert!((got[1] - (mid + rad)).abs() <= 1e-13 * norm);
        prop_assert!((hi - d).abs() <= (lo - d).abs());
    }

    #[test]
    fn sweeps_are_similarities((d, e) in tridiagonal(10), mu in -10.0..10.0f64) {
        let n = d.len();
        let t = TridiagonalBatch::new(1, n, d.clone(), e.clone()).unwrap();
        let before = t.dense_matrix(0);
        let (mut d2, mut e2) = (d, e);
        sweep_matrix(&mut d2, &mut e2, n, mu, None);
        let after = TridiagonalBatch::new(1, n, d2, e2).unwrap().dense_matrix(0);
        let (v0, _) = jacobi_eig(&before, n, 1e-14).unwrap();
        let (v1, _) = jacobi_eig(&after, n, 1e-14).unwrap();
        let scale = frobenius(&before).max(1.0);
        prop_assert!(max_abs_diff(&sorted(v0), &sorted(v1)) <= 1e-11 * scale);
        prop_assert!((trace(&before, n) - trace(&after, n)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn solves_satisfy_invariants(n in 1usize..=20, batch in 1usize..=6, seed in any::<u64>(), decades in 0.0..3.0f64) {
        let a = gen_spd(batch, n, seed, decades);
        let e = batched_eig(&a, &SolverConfig::default()).unwrap();
        for k in 0..batch {
            let v = e.vectors(k).unwrap();
            let norm = frobenius(a.matrix(k));
            let rec = reconstruct(v, e.values(k), n);
            let diff: Vec<f64> = rec.iter().zip(a.matrix(k)).map(|(x, y)| x - y).collect();
            prop_assert!(frobenius(&diff) <= 1e-10 * norm);
            prop_assert!(orthogonality_defect(v, n) <= 1e-10 * n as f64);
            prop_assert!(e.values(k).windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn windowed_steps_equal_dense(n in 2usize..=8, seed in any::<u64>()) {
        let a = gen_spd(3, n, seed, 3.0);
        let (t, _) = tridiagonalize(&a, &SolverConfig::values_only()).unwrap();
        prop_assert!(windowed_discrepancy(&t, &SolverConfig::default()).unwrap() <= 1e-12);
    }

    #[test]
    fn two_n_double_steps_suffice(n in 3usize..=24, seed in any::<u64>()) {
        let a = gen_spd(1, n, seed, 3.0);
        let (t, _) = tridiagonalize(&a, &SolverConfig::values_only()).unwrap();
        let eps = 1e-5;
        let mut st = SweepState::new(&t, false);
        st.try_deflate(eps);
        for _ in 0..2 * n {
            if st.active_dim <= 2 {
                break;
            }
            st.gated_double_step(eps);
            st.try_deflate(eps);
        }
        prop_assert!(st.active_dim <= 2);
    }
}
