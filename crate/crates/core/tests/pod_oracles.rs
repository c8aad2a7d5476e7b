mod common;

use common::{gaussian, low_rank, rng};
use grasstree::grassmann::riemannian_distance;
use grasstree::pod::{pod_basis, randomized_svd, reconstruction_error, thin_svd, PodBasis};
use grasstree::DenseMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    let mut r = rng(11);
    for _ in 0..20 {
        let m = gaussian(&mut r, 6, 4);
        let svd = thin_svd(&m).unwrap();
        let gram = to_nalgebra(&m).transpose() * to_nalgebra(&m);
        let mut eig: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (s, e) in svd.sigma.iter().zip(&eig) {
            assert!((s * s - e).abs() < 1e-8 * eig[0].max(1.0), "{s}² vs {e}");
        }
    }
}

#[test]
fn svd_reconstructs_input() {
    let mut r = rng(12);
    for (rows, cols) in [(30, 7), (7, 30), (40, 40), (300, 5)] {
        let m = gaussian(&mut r, rows, cols);
        let back = thin_svd(&m).unwrap().reconstruct();
        let rel = back.sub(&m).unwrap().frobenius_sq().sqrt() / m.frobenius_sq().sqrt();
        assert!(rel < 1e-8, "{rows}x{cols}: {rel}");
    }
}

#[test]
fn exact_low_rank_recovered_by_rsvd() {
    let mut r = rng(13);
    for k in [1, 3, 8, 20] {
        let d = low_rank(&mut r, 120, 90, k);
        let exact = PodBasis::new(thin_svd(&d).unwrap().u.leading_columns(k)).unwrap();
        let approx = PodBasis::new(randomized_svd(&d, k, 10, 99).unwrap().u).unwrap();
        assert!(riemannian_distance(&exact, &approx).unwrap() < 1e-6);
    }
}

#[test]
fn rsvd_is_seed_deterministic() {
    let d = gaussian(&mut rng(14), 50, 40);
    let a = randomized_svd(&d, 5, 10, 3).unwrap();
    let b = randomized_svd(&d, 5, 10, 3).unwrap();
    assert_eq!(a.u, b.u);
    assert_eq!(a.sigma, b.sigma);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eckart_young(rows in 2usize..60, cols in 2usize..40, seed in any::<u64>(), r_pick in 0usize..3) {
        let d = gaussian(&mut rng(seed), rows, cols);
        let r = [1, 5, 10][r_pick].min(rows.min(cols));
        let svd = thin_svd(&d).unwrap();
        let tail: f64 = svd.sigma[r..].iter().map(|s| s * s).sum();
        let err = reconstruction_error(&d, &pod_basis(&d, r).unwrap()).unwrap();
        prop_assert!((err - tail).abs() <= 1e-8 * d.frobenius_sq());
    }

    #[test]
    fn pod_basis_is_orthonormal(rows in 1usize..50, cols in 1usize..50, seed in any::<u64>()) {
        let d = gaussian(&mut rng(seed), rows, cols);
        let r = rows.min(cols);
        let phi = pod_basis(&d, r).unwrap().into_matrix();
        let gram = phi.transpose().matmul(&phi).unwrap();
        prop_assert!(gram.sub(&DenseMatrix::identity(r)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn reconstruction_error_bounded_by_energy(rows in 2usize..30, cols in 2usize..30, seed in any::<u64>()) {
        let mut g = rng(seed);
        let d = gaussian(&mut g, rows, cols);
        let b = pod_basis(&gaussian(&mut g, rows, 1), 1).unwrap();
        let e = reconstruction_error(&d, &b).unwrap();
        prop_assert!(e >= 0.0 && e <= d.frobenius_sq() * (1.0 + 1e-12));
    }
}
