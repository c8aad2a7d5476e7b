//! Random matrices, subspaces and synthetic archives shared by the
//! integration tests.
#![allow(dead_code)]

use grasstree::pod::{pod_basis, PodBasis};
use grasstree::snapshot::{SnapshotEntry, SnapshotSet};
use grasstree::{DenseMatrix, ParamPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// A uniformly random point of G(r, n).
pub fn random_basis(rng: &mut ChaCha8Rng, n: usize, r: usize) -> PodBasis {
    pod_basis(&gaussian(rng, n, r), r).unwrap()
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, r: usize) -> DenseMatrix {
    pod_basis(&gaussian(rng, r, r), r).unwrap().into_matrix()
}

/// Orthonormal `n × r` block orthogonal to `span(y)`; needs `n ≥ 2r`.
pub fn orthogonal_complement(rng: &mut ChaCha8Rng, y: &PodBasis) -> PodBasis {
    let (n, r) = y.phi().shape();
    let g = gaussian(rng, n, r);
    let yty_g = y.phi().matmul(&y.phi().transpose().matmul(&g).unwrap()).unwrap();
    pod_basis(&g.sub(&yty_g).unwrap(), r).unwrap()
}

/// `Y cos Θ + W sin Θ`: principal angles to `span(Y)` are exactly `angles`.
pub fn at_angles(y: &PodBasis, w: &PodBasis, angles: &[f64]) -> PodBasis {
    let (n, r) = y.phi().shape();
    PodBasis::new(DenseMatrix::from_fn(n, r, |i, j| {
        y.phi().get(i, j) * angles[j].cos() + w.phi().get(i, j) * angles[j].sin()
    }))
    .unwrap()
}

pub fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, k: usize) -> DenseMatrix {
    gaussian(rng, rows, k).matmul(&gaussian(rng, k, cols)).unwrap()
}

/// Snapshots spanning coordinate directions `e_a, e_b` of ℝ⁸.
fn cluster_snapshots(a: usize, b: usize) -> DenseMatrix {
    DenseMatrix::from_fn(8, 5, |i, j| {
        let t = j as f64;
        if i == a {
            1.0 + t
        } else if i == b {
            2.0 - 0.5 * t * t
        } else {
            0.0
        }
    })
}

/// Two clusters in λ: below 0.5 every entry spans `{e0, e1}`, above it
/// every entry spans `{e4, e5}`. Training λ are 0.1–0.4 and 0.6–0.9; the
/// returned test set holds 0.15, 0.35, 0.65 and 0.85.
pub fn two_cluster() -> (SnapshotSet, SnapshotSet) {
    let make = |lams: &[f64]| {
        let entries = lams
            .iter()
            .map(|&lam| SnapshotEntry {
                id: format!("c{lam}"),
                lambda: ParamPoint::scalar(lam).unwrap(),
                snapshots: if lam < 0.5 {
                    cluster_snapshots(0, 1)
                } else {
                    cluster_snapshots(4, 5)
                },
            })
            .collect();
        SnapshotSet::from_entries(entries).unwrap()
    };
    (
        make(&[0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9]),
        make(&[0.15, 0.35, 0.65, 0.85]),
    )
}
