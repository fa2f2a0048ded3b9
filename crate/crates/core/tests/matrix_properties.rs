use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use smc_core::matrix::{nuclear_norm, numerical_rank, orthonormalize, soft_threshold_singular_values};
use smc_core::{column_space_projector, fill_combine, project_observed, project_unobserved, svd, DenseMatrix, ObservationMask};

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn dense(m: DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_matrix(m).unwrap()
}

fn objective(a: &DMatrix<f64>, w: &DMatrix<f64>, lambda: f64) -> f64 {
    0.5 * (a - w).norm_squared() + lambda * nuclear_norm(w).unwrap()
}

fn shape() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..12, 1usize..9, any::<u64>())
}

#[test]
fn constructed_spectrum_is_recovered() {
    let u = orthonormalize(&gaussian(5, 4, 1));
    let v = orthonormalize(&gaussian(4, 4, 2));
    let a = &u * DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 2.0, 1.0, 0.0])) * v.transpose();
    let d = svd(&a).unwrap().d;
    for (got, want) in d.iter().zip([4.0, 2.0, 1.0, 0.0]) {
        assert!((got - want).abs() < 1e-8, "{d:?}");
    }
}

#[test]
fn rank_deficient_spectra_match_gram_eigenvalues() {
    // Guards against SVD tolerances that stop the QR sweeps too early on
    // exactly rank-deficient input.
    for seed in 0..40 {
        let (n, p) = (6 + seed as usize % 10, 3 + seed as usize % 5);
        let r = 1 + seed as usize % p.min(3);
        let a = gaussian(n, r, seed) * gaussian(r, p, seed + 1000);
        let d = svd(&a).unwrap().d;
        let mut eig: Vec<f64> = (a.transpose() * &a).symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        for (s, e) in d.iter().zip(&eig) {
            assert!((s - e).abs() <= 1e-7 * d[0], "seed {seed}: {d:?} vs {eig:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_invariants((n, p, seed) in shape()) {
        let a = gaussian(n, p, seed);
        let f = svd(&a).unwrap();
        let r = n.min(p);
        prop_assert_eq!(f.d.len(), r);
        prop_assert!(f.d.windows(2).all(|w| w[0] >= w[1]) && f.d.iter().all(|&s| s >= 0.0));
        let tol = 1e-10 * n.max(p) as f64;
        prop_assert!((f.u.transpose() * &f.u - DMatrix::identity(r, r)).norm() <= tol);
        prop_assert!((f.v.transpose() * &f.v - DMatrix::identity(r, r)).norm() <= tol);
        prop_assert!((f.reconstruct() - &a).norm() <= 1e-8 * a.norm().max(1e-300));
    }

    #[test]
    fn shrunk_nuclear_norm_is_sum_of_positive_parts((n, p, seed) in shape(), lambda in 0.0f64..3.0) {
        let a = gaussian(n, p, seed);
        let f = svd(&a).unwrap();
        let want: f64 = f.d.iter().map(|s| (s - lambda).max(0.0)).sum();
        let w = soft_threshold_singular_values(&f, lambda).unwrap();
        prop_assert!((nuclear_norm(w.as_matrix()).unwrap() - want).abs() <= 1e-9 * want.max(1.0));
        let above = f.d.iter().filter(|&&s| s > lambda).count();
        prop_assert_eq!(numerical_rank(&svd(w.as_matrix()).unwrap().d), above);
    }

    #[test]
    fn rank_is_monotone_in_lambda((n, p, seed) in shape(), l1 in 0.0f64..3.0, l2 in 0.0f64..3.0) {
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        let f = svd(&gaussian(n, p, seed)).unwrap();
        let rank = |l: f64| f.d.iter().filter(|&&s| s > l).count();
        let w_lo = soft_threshold_singular_values(&f, lo).unwrap();
        let w_hi = soft_threshold_singular_values(&f, hi).unwrap();
        prop_assert!(rank(lo) >= rank(hi));
        prop_assert!(numerical_rank(&svd(w_lo.as_matrix()).unwrap().d) >= numerical_rank(&svd(w_hi.as_matrix()).unwrap().d));
    }

    #[test]
    fn projector_properties(n in 4usize..30, k in 1usize..6, dup in any::<bool>(), seed in any::<u64>()) {
        let k = k.min(n - 1);
        let mut z = gaussian(n, k, seed);
        if dup {
            let c = z.column(0).into_owned();
            z = z.insert_column(k, 0.0);
            z.set_column(k, &(c * 2.0));
        }
        let h = column_space_projector(&dense(z.clone())).unwrap();
        prop_assert_eq!(h.rank(), k);
        let a = gaussian(n, 3, seed ^ 1);
        let b = gaussian(n, 3, seed ^ 2);
        let ha = h.apply(&a);
        prop_assert!((h.apply(&ha) - &ha).norm() <= 1e-10 * ha.norm().max(1.0));
        let lhs = ha.dot(&b);
        let rhs = a.dot(&h.apply(&b));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * a.norm() * b.norm());
        prop_assert!((h.apply(&z) - &z).norm() <= 1e-8 * z.norm());
    }

    #[test]
    fn mask_projections_partition((n, p, seed) in shape(), density in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = ObservationMask::from_fn(n, p, |_, _| rng.random::<f64>() < density);
        let a = dense(gaussian(n, p, seed));
        let obs = project_observed(&a, &mask).unwrap();
        let un = project_unobserved(&a, &mask).unwrap();
        prop_assert_eq!(obs.as_matrix() + un.as_matrix(), a.as_matrix().clone());
        prop_assert_eq!(project_observed(&obs, &mask).unwrap(), obs.clone());
        prop_assert!(project_unobserved(&obs, &mask).unwrap().as_matrix().iter().all(|&v| v == 0.0));
        let w = dense(gaussian(n, p, seed ^ 7));
        let f = fill_combine(&a, &w, &mask).unwrap();
        for i in 0..n {
            for j in 0..p {
                let want = if mask.is_observed(i, j) { a.get(i, j) } else { w.get(i, j) };
                prop_assert_eq!(f.get(i, j).to_bits(), want.to_bits());
            }
        }
    }
}

#[test]
fn soft_threshold_beats_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..10 {
        let a = gaussian(8, 5, 500 + case);
        let f = svd(&a).unwrap();
        let lambda = 0.5 * f.d[1];
        let w = soft_threshold_singular_values(&f, lambda).unwrap().into_matrix();
        let best = objective(&a, &w, lambda);
        for _ in 0..100 {
            let dir = DMatrix::from_fn(8, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
            let delta = dir.scale(rng.random_range(1e-3..0.1) / dir.norm());
            assert!(best <= objective(&a, &(&w + delta), lambda) - 1e-12);
        }
    }
}

#[test]
fn duplicated_ones_column_gives_mean_projector() {
    let single = column_space_projector(&dense(DMatrix::from_element(9, 1, 1.0))).unwrap();
    let double = column_space_projector(&dense(DMatrix::from_element(9, 2, 1.0))).unwrap();
    assert_eq!(double.rank(), 1);
    for seed in 0..10 {
        let a = gaussian(9, 1, seed);
        let mean = a.mean();
        assert!((single.apply(&a) - DMatrix::from_element(9, 1, mean)).norm() < 1e-10);
        assert!((single.apply(&a) - double.apply(&a)).norm() < 1e-10);
    }
}
