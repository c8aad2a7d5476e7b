mod common;

use common::{rng, two_cluster};
use grasstree::grassmann::riemannian_distance;
use grasstree::pod::{pod_basis, reconstruction_error};
use grasstree::snapshot::{SnapshotEntry, SnapshotSet};
use grasstree::tree::{self, best_split, GrassmannTree, Member, Node, TreeConfig};
use grasstree::{DenseMatrix, ParamPoint};
use rand::seq::SliceRandom;
use rand::Rng;

/// A smooth two-parameter family whose dominant modes rotate with λ₀ and,
/// more weakly, with λ₁.
fn family(points: &[(f64, f64)]) -> SnapshotSet {
    let entries = points
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| SnapshotEntry {
            id: format!("e{k:02}"),
            lambda: ParamPoint::new(vec![a, b]).unwrap(),
            snapshots: DenseMatrix::from_fn(30, 12, |i, j| {
                let x = i as f64 / 29.0;
                let t = j as f64 / 11.0;
                ((1.0 + 4.0 * a) * std::f64::consts::PI * x).sin() * (1.0 + t)
                    + (b * 3.0 * x + t).cos() * (0.5 - t * a)
                    + 0.2 * (7.0 * x * (1.0 + b)).sin() * t * t
            }),
        })
        .collect();
    SnapshotSet::from_entries(entries).unwrap()
}

fn grid_points() -> Vec<(f64, f64)> {
    let mut g = rng(5);
    (0..24).map(|_| (g.random_range(0.0..1.0), g.random_range(0.0..1.0))).collect()
}

#[test]
fn two_clusters_give_one_clean_split() {
    let (train, test) = two_cluster();
    let fitted = tree::fit(&train, &TreeConfig::new(2, 2)).unwrap();
    assert_eq!(fitted.depth(), 1);
    let splits = fitted.splits();
    assert_eq!(splits.len(), 1);
    let (var, value) = splits[0];
    assert_eq!(var, 0);
    assert!(value > 0.4 && value < 0.6, "split at {value}");
    assert_eq!(value, 0.5);

    let blocks: Vec<&DenseMatrix> = train.entries().iter().map(|e| &e.snapshots).collect();
    let global = pod_basis(&DenseMatrix::hconcat(&blocks).unwrap(), 2).unwrap();
    for e in test.entries() {
        let tree_err = reconstruction_error(&e.snapshots, fitted.predict(&e.lambda).unwrap()).unwrap();
        assert!(tree_err < 1e-20, "tree error {tree_err}");
        assert!(reconstruction_error(&e.snapshots, &global).unwrap() > 1.0);
    }
}

#[test]
fn cluster_split_has_zero_cost() {
    let (train, _) = two_cluster();
    let cfg = TreeConfig::new(2, 2);
    let bases: Vec<_> = train.entries().iter().map(|e| pod_basis(&e.snapshots, 2).unwrap()).collect();
    let members: Vec<Member<'_>> = train
        .entries()
        .iter()
        .zip(&bases)
        .map(|(e, b)| Member {
            id: &e.id,
            lambda: &e.lambda,
            snapshots: &e.snapshots,
            basis: b,
        })
        .collect();
    let best = best_split(&members, &cfg).unwrap().unwrap();
    assert_eq!((best.var, best.value), (0, 0.5));
    assert!(best.cost < 1e-8);
}

#[test]
fn min_leaf_at_least_n_reproduces_global_pod() {
    let set = family(&grid_points());
    let fitted = tree::fit(&set, &TreeConfig::new(4, set.len())).unwrap();
    assert_eq!(fitted.num_leaves(), 1);
    let blocks: Vec<&DenseMatrix> = set.entries().iter().map(|e| &e.snapshots).collect();
    let global = pod_basis(&DenseMatrix::hconcat(&blocks).unwrap(), 4).unwrap();
    let p = fitted.predict(&ParamPoint::new(vec![0.3, 0.7]).unwrap()).unwrap();
    assert!(riemannian_distance(p, &global).unwrap() < 1e-8);
}

#[test]
fn fit_is_invariant_to_entry_order() {
    let points = grid_points();
    let set = family(&points);
    let reference = tree::fit(&set, &TreeConfig::new(3, 3)).unwrap();
    assert!(reference.num_leaves() > 1);
    let mut g = rng(9);
    for _ in 0..3 {
        let mut entries = set.entries().to_vec();
        entries.shuffle(&mut g);
        let shuffled = tree::fit(&SnapshotSet::from_entries(entries).unwrap(), &TreeConfig::new(3, 3)).unwrap();
        assert_eq!(shuffled.splits(), reference.splits());
        for (a, b) in shuffled.leaves().iter().zip(reference.leaves()) {
            assert_eq!(a.members, b.members);
            assert_eq!(a.basis, b.basis);
        }
    }
}

#[test]
fn accepted_splits_strictly_reduce_the_objective() {
    let set = family(&grid_points());
    let fitted = tree::fit(&set, &TreeConfig::new(3, 2)).unwrap();
    let mut splits = 0;
    for node in fitted.nodes() {
        if let Node::Split {
            node_cost, split_cost, ..
        } = node
        {
            splits += 1;
            assert!(split_cost < node_cost, "{split_cost} !< {node_cost}");
        }
    }
    assert!(splits >= 2);
    for leaf in fitted.leaves() {
        assert!(leaf.members.len() >= 2);
    }
}

#[test]
fn every_target_routes_to_a_leaf_that_respects_the_splits() {
    let set = family(&grid_points());
    let fitted = tree::fit(&set, &TreeConfig::new(3, 3)).unwrap();
    let mut g = rng(10);
    for _ in 0..100 {
        let p = ParamPoint::new(vec![g.random_range(-0.5..1.5), g.random_range(-0.5..1.5)]).unwrap();
        let leaf = fitted.route(&p).unwrap();
        assert!(fitted.leaves().iter().any(|l| l.region == leaf.region));
    }
}

#[test]
fn serialized_tree_predicts_identically() {
    let set = family(&grid_points());
    let fitted = tree::fit(&set, &TreeConfig::new(3, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    tree::serialize(&fitted, dir.path()).unwrap();
    let back: GrassmannTree = tree::deserialize(dir.path()).unwrap();
    assert_eq!(back.splits(), fitted.splits());
    assert_eq!(back.config(), fitted.config());
    let mut g = rng(11);
    for _ in 0..100 {
        let p = ParamPoint::new(vec![g.random_range(0.0..1.0), g.random_range(0.0..1.0)]).unwrap();
        let (a, b) = (fitted.predict(&p).unwrap(), back.predict(&p).unwrap());
        assert_eq!(a, b);
        assert_eq!(riemannian_distance(a, b).unwrap(), 0.0);
    }
}

#[test]
fn corrupted_tree_files_are_rejected() {
    let set = family(&grid_points());
    let fitted = tree::fit(&set, &TreeConfig::new(3, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    tree::serialize(&fitted, dir.path()).unwrap();
    let path = dir.path().join(tree::TREE_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"left\": 1", "\"left\": 0", 1)).unwrap();
    assert!(tree::deserialize(dir.path()).is_err());
    let missing = tempfile::tempdir().unwrap();
    assert!(tree::deserialize(missing.path()).unwrap_err().is_io());
}
