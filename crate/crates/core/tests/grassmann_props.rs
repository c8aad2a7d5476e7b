mod common;

use std::f64::consts::FRAC_PI_2;

use common::{at_angles, orthogonal_complement, random_basis, random_orthogonal, rng};
use grasstree::grassmann::{
    exp_map, interpolate_basis, log_map, principal_angles, riemannian_distance, stability_check,
    TangentVector,
};
use grasstree::pod::PodBasis;
use grasstree::{DenseMatrix, ParamPoint};
use proptest::prelude::*;
use rand::Rng;

fn rotate(b: &PodBasis, q: &DenseMatrix) -> PodBasis {
    PodBasis::new(b.phi().matmul(q).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(seed in any::<u64>(), n in 4usize..30, r_raw in 1usize..6) {
        let r = r_raw.min(n / 2);
        let mut g = rng(seed);
        let (a, b, c) = (random_basis(&mut g, n, r), random_basis(&mut g, n, r), random_basis(&mut g, n, r));
        let ab = riemannian_distance(&a, &b).unwrap();
        let ba = riemannian_distance(&b, &a).unwrap();
        let ac = riemannian_distance(&a, &c).unwrap();
        let cb = riemannian_distance(&c, &b).unwrap();
        prop_assert!(ab.is_finite() && ac.is_finite() && cb.is_finite());
        prop_assert!((ab - ba).abs() <= 1e-10);
        prop_assert!(ab <= ac + cb + 1e-8);
        prop_assert!(ab <= (r as f64).sqrt() * FRAC_PI_2 + 1e-12);
        prop_assert!(riemannian_distance(&a, &a).unwrap() < 1e-8);
    }

    #[test]
    fn distance_ignores_choice_of_basis(seed in any::<u64>(), n in 4usize..30, r_raw in 1usize..6) {
        let r = r_raw.min(n / 2);
        let mut g = rng(seed);
        let (a, b) = (random_basis(&mut g, n, r), random_basis(&mut g, n, r));
        let (qa, qb) = (random_orthogonal(&mut g, r), random_orthogonal(&mut g, r));
        let before = riemannian_distance(&a, &b).unwrap();
        let after = riemannian_distance(&rotate(&a, &qa), &rotate(&b, &qb)).unwrap();
        prop_assert!((before - after).abs() <= 1e-10);
    }

    #[test]
    fn distance_invariant_under_ambient_rotation(seed in any::<u64>(), n in 4usize..20, r_raw in 1usize..5) {
        let r = r_raw.min(n / 2);
        let mut g = rng(seed);
        let (a, b) = (random_basis(&mut g, n, r), random_basis(&mut g, n, r));
        let q = random_orthogonal(&mut g, n);
        let turn = |x: &PodBasis| PodBasis::new(q.matmul(x.phi()).unwrap()).unwrap();
        let before = riemannian_distance(&a, &b).unwrap();
        prop_assert!((before - riemannian_distance(&turn(&a), &turn(&b)).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn constructed_angles_are_recovered(seed in any::<u64>(), n in 6usize..30) {
        let mut g = rng(seed);
        let r = 3.min(n / 2);
        let y = random_basis(&mut g, n, r);
        let w = orthogonal_complement(&mut g, &y);
        let mut angles: Vec<f64> = (0..r).map(|_| g.random_range(0.0..FRAC_PI_2)).collect();
        let x = at_angles(&y, &w, &angles);
        angles.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut got = principal_angles(&y, &x).unwrap().as_slice().to_vec();
        got.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for (e, a) in angles.iter().zip(&got) {
            prop_assert!((e - a).abs() < 1e-9, "{e} vs {a}");
        }
    }

    #[test]
    fn exp_log_roundtrip(seed in any::<u64>(), n in 6usize..40, r_raw in 1usize..6) {
        let r = r_raw.min(n / 2);
        let mut g = rng(seed);
        let y = random_basis(&mut g, n, r);
        let w = orthogonal_complement(&mut g, &y);
        let angles: Vec<f64> = (0..r).map(|_| g.random_range(0.0..FRAC_PI_2 - 1e-3)).collect();
        let target = rotate(&at_angles(&y, &w, &angles), &random_orthogonal(&mut g, r));
        let t = log_map(&y, &target).unwrap();
        prop_assert!(stability_check(&t).max_angle < FRAC_PI_2);
        let back = exp_map(&y, &t).unwrap();
        prop_assert!(riemannian_distance(&back, &target).unwrap() < 1e-8);
    }

    #[test]
    fn log_exp_roundtrip(seed in any::<u64>(), n in 6usize..30, r_raw in 1usize..5) {
        let r = r_raw.min(n / 2);
        let mut g = rng(seed);
        let y = random_basis(&mut g, n, r);
        // random tangent with spectral norm below π/2
        let raw = common::gaussian(&mut g, n, r);
        let t = TangentVector::new(y.clone(), raw).unwrap();
        let scale = 1.2 / t.max_angle();
        let t = TangentVector::new(y.clone(), t.gamma().scale(scale)).unwrap();
        let x = exp_map(&y, &t).unwrap();
        let back = log_map(&y, &x).unwrap();
        prop_assert!(back.gamma().sub(t.gamma()).unwrap().max_abs() < 1e-8);
    }
}

/// Midpoint of the geodesic between `span(Y)` and `span(X)`, built from
/// principal vectors: `(aᵢ + bᵢ)/‖aᵢ + bᵢ‖`.
fn direct_midpoint(y: &PodBasis, x: &PodBasis) -> PodBasis {
    let m = y.phi().transpose().matmul(x.phi()).unwrap();
    let svd = grasstree::pod::thin_svd(&m).unwrap();
    let a = y.phi().matmul(&svd.u).unwrap();
    let b = x.phi().matmul(&svd.v).unwrap();
    let (n, r) = a.shape();
    let mut cols = Vec::with_capacity(r);
    for j in 0..r {
        let s: Vec<f64> = (0..n).map(|i| a.get(i, j) + b.get(i, j)).collect();
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        cols.push(s.into_iter().map(|v| v / norm).collect::<Vec<_>>());
    }
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    PodBasis::new(DenseMatrix::from_columns(&refs).unwrap()).unwrap()
}

#[test]
fn interpolated_midpoint_lies_on_geodesic() {
    let mut g = rng(21);
    for _ in 0..20 {
        let (n, r) = (25, 3);
        let y = random_basis(&mut g, n, r);
        let w = orthogonal_complement(&mut g, &y);
        let angles: Vec<f64> = (0..r).map(|_| g.random_range(0.05..1.4)).collect();
        let x = rotate(&at_angles(&y, &w, &angles), &random_orthogonal(&mut g, r));
        let train = vec![
            (ParamPoint::scalar(0.0).unwrap(), y.clone()),
            (ParamPoint::scalar(1.0).unwrap(), x.clone()),
        ];
        let (mid, flag) = interpolate_basis(&train, 0, &ParamPoint::scalar(0.5).unwrap()).unwrap();
        assert!(flag.stable);
        let dy = riemannian_distance(&mid, &y).unwrap();
        let dx = riemannian_distance(&mid, &x).unwrap();
        assert!((dy - dx).abs() < 1e-6, "{dy} vs {dx}");
        assert!(riemannian_distance(&mid, &direct_midpoint(&y, &x)).unwrap() < 1e-8);
    }
}

#[test]
fn interpolation_reproduces_training_points() {
    let mut g = rng(22);
    let bases: Vec<PodBasis> = {
        let y = random_basis(&mut g, 20, 2);
        (0..4)
            .map(|k| {
                let w = orthogonal_complement(&mut g, &y);
                at_angles(&y, &w, &[0.1 * k as f64, 0.2 * k as f64])
            })
            .collect()
    };
    let train: Vec<(ParamPoint, PodBasis)> = bases
        .iter()
        .enumerate()
        .map(|(k, b)| (ParamPoint::scalar(k as f64).unwrap(), b.clone()))
        .collect();
    for reference in 0..4 {
        for (k, b) in bases.iter().enumerate() {
            let (p, _) = interpolate_basis(&train, reference, &ParamPoint::scalar(k as f64).unwrap()).unwrap();
            assert!(riemannian_distance(&p, b).unwrap() < 1e-8);
        }
    }
}
