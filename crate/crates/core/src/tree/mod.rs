//! Binary regression trees on the Grassmann manifold.
//!
//! Each internal node splits parameter space on one coordinate,
//! `λ⁽ʲ⁾ ≤ l` going left. Each leaf holds the locally-global POD basis of
//! the training runs that reach it: the POD of their horizontally
//! concatenated snapshot matrices. Splits are grown greedily, choosing
//! `(j, l)` to minimize
//!
//! ```text
//! Σ_{i ∈ left}  δ(Φ_i, Φ̂_L) + Σ_{i ∈ right} δ(Φ_i, Φ̂_R)
//! ```
//!
//! where `Φ_i` is the rank-`r` POD basis of run `i` alone and `δ` the
//! Riemannian distance.

mod io;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::riemannian_distance;
use crate::matrix::{DenseMatrix, ParamPoint};
use crate::pod::{pod_basis, randomized_svd, PodBasis, DEFAULT_OVERSAMPLE};
use crate::snapshot::SnapshotSet;

pub use io::{deserialize, serialize, TREE_FILE};

/// An accepted split must lower the node objective by at least this much.
pub const MIN_IMPROVEMENT: f64 = 1e-12;

/// Leaf bases switch to the randomized SVD once the concatenated width
/// exceeds this multiple of `rank + oversample`.
pub const RSVD_WIDTH_FACTOR: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Rank `r` of every basis in the tree.
    pub rank: usize,
    /// Minimum number of training runs per leaf.
    pub min_leaf: usize,
    pub use_rsvd: bool,
    pub rsvd_oversample: usize,
    pub rsvd_seed: u64,
}

impl TreeConfig {
    pub fn new(rank: usize, min_leaf: usize) -> Self {
        TreeConfig {
            rank,
            min_leaf,
            use_rsvd: false,
            rsvd_oversample: DEFAULT_OVERSAMPLE,
            rsvd_seed: 0,
        }
    }

    pub fn with_rsvd(mut self, oversample: usize, seed: u64) -> Self {
        self.use_rsvd = true;
        self.rsvd_oversample = oversample;
        self.rsvd_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// A candidate split `λ⁽ʲ⁾ ≤ value` and its objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub var: usize,
    pub value: f64,
    pub cost: f64,
}

/// One training run as seen by the split search.
#[derive(Clone, Copy, Debug)]
pub struct Member<'a> {
    pub id: &'a str,
    pub lambda: &'a ParamPoint,
    pub snapshots: &'a DenseMatrix,
    /// The run's own rank-`r` POD basis.
    pub basis: &'a PodBasis,
}

/// Locally-global POD basis of `members`: the rank-`r` POD of their
/// concatenated snapshots.
pub fn leaf_basis(members: &[&DenseMatrix], cfg: &TreeConfig) -> Result<PodBasis> {
    if members.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let joined = DenseMatrix::hconcat(members)?;
    let r = cfg.rank;
    let sketch = r + cfg.rsvd_oversample;
    if cfg.use_rsvd && joined.cols() > RSVD_WIDTH_FACTOR * sketch {
        let svd = randomized_svd(&joined, r, cfg.rsvd_oversample, cfg.rsvd_seed)?;
        PodBasis::new(svd.u)
    } else {
        pod_basis(&joined, r)
    }
}

fn lex_cmp(a: &ParamPoint, b: &ParamPoint) -> Ordering {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Orders members by parameter, then id, so results never depend on input order.
fn canonical<'a>(members: &[Member<'a>]) -> Vec<Member<'a>> {
    let mut sorted = members.to_vec();
    sorted.sort_by(|a, b| lex_cmp(a.lambda, b.lambda).then_with(|| a.id.cmp(b.id)));
    sorted
}

fn objective(members: &[Member<'_>], basis: &PodBasis) -> Result<f64> {
    members
        .iter()
        .map(|m| riemannian_distance(m.basis, basis))
        .sum()
}

fn side_cost(members: &[Member<'_>], cfg: &TreeConfig) -> Result<f64> {
    let blocks: Vec<&DenseMatrix> = members.iter().map(|m| m.snapshots).collect();
    objective(members, &leaf_basis(&blocks, cfg)?)
}

/// All admissible `(j, l)` pairs: midpoints between consecutive distinct
/// values of each coordinate leaving at least `min_leaf` runs on each side.
fn candidate_splits(members: &[Member<'_>], min_leaf: usize) -> Vec<(usize, f64)> {
    let d = members[0].lambda.dim();
    let mut out = Vec::new();
    for j in 0..d {
        let mut values: Vec<f64> = members.iter().map(|m| m.lambda.coord(j)).collect();
        values.sort_by(f64::total_cmp);
        let mut below = 0;
        for k in 0..values.len() - 1 {
            below += 1;
            if values[k] == values[k + 1] {
                continue;
            }
            let above = values.len() - below;
            if below >= min_leaf && above >= min_leaf {
                out.push((j, 0.5 * (values[k] + values[k + 1])));
            }
        }
    }
    out
}

fn partition<'a>(members: &[Member<'a>], var: usize, value: f64) -> (Vec<Member<'a>>, Vec<Member<'a>>) {
    members
        .iter()
        .copied()
        .partition(|m| m.lambda.coord(var) <= value)
}

/// Result of searching one node: the best admissible split (if it improves
/// the objective) plus the node's own basis and objective.
struct NodeSearch {
    split: Option<SplitCandidate>,
    basis: Option<PodBasis>,
    cost: Option<f64>,
}

fn search(members: &[Member<'_>], cfg: &TreeConfig) -> Result<NodeSearch> {
    if members.len() < 2 * cfg.min_leaf {
        return Ok(NodeSearch {
            split: None,
            basis: None,
            cost: None,
        });
    }
    let members = canonical(members);
    let blocks: Vec<&DenseMatrix> = members.iter().map(|m| m.snapshots).collect();
    let node_basis = leaf_basis(&blocks, cfg)?;
    let node_cost = objective(&members, &node_basis)?;

    let candidates = candidate_splits(&members, cfg.min_leaf);
    let scored: Vec<SplitCandidate> = candidates
        .par_iter()
        .map(|&(var, value)| {
            let (left, right) = partition(&members, var, value);
            let cost = side_cost(&left, cfg)? + side_cost(&right, cfg)?;
            Ok(SplitCandidate { var, value, cost })
        })
        .collect::<Result<_>>()?;

    // smallest cost, then smallest variable, then smallest split value
    let best = scored.into_iter().min_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then(a.var.cmp(&b.var))
            .then(a.value.total_cmp(&b.value))
    });
    let split = best.filter(|b| node_cost - b.cost >= MIN_IMPROVEMENT);
    Ok(NodeSearch {
        split,
        basis: Some(node_basis),
        cost: Some(node_cost),
    })
}

/// Best split of `members`, or `None` when no admissible split leaves
/// `min_leaf` runs per side or none improves on not splitting.
pub fn best_split(members: &[Member<'_>], cfg: &TreeConfig) -> Result<Option<SplitCandidate>> {
    cfg.validate()?;
    Ok(search(members, cfg)?.split)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Split {
        var: usize,
        value: f64,
        left: usize,
        right: usize,
        /// Objective of the unsplit node.
        node_cost: f64,
        /// Objective after splitting.
        split_cost: f64,
    },
    Leaf(Leaf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub region: usize,
    pub basis: PodBasis,
    pub members: Vec<String>,
}

/// A fitted tree. Nodes live in an arena with the root at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannTree {
    nodes: Vec<Node>,
    dim: usize,
    config: TreeConfig,
}

impl GrassmannTree {
    pub(crate) fn from_parts(nodes: Vec<Node>, dim: usize, config: TreeConfig) -> Self {
        GrassmannTree { nodes, dim, config }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Parameter dimension `d` the tree was trained on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn rank(&self) -> usize {
        self.config.rank
    }

    /// Leaves in region order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut leaves: Vec<&Leaf> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(l) => Some(l),
                Node::Split { .. } => None,
            })
            .collect();
        leaves.sort_by_key(|l| l.region);
        leaves
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves().len()
    }

    /// Splits as `(var, value)` in depth-first order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            if let Node::Split {
                var,
                value,
                left,
                right,
                ..
            } = &self.nodes[i]
            {
                out.push((*var, *value));
                stack.push(*right);
                stack.push(*left);
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// The leaf whose region contains `target`.
    pub fn route(&self, target: &ParamPoint) -> Result<&Leaf> {
        if target.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "tree was trained on {}-dimensional parameters, got {}",
                self.dim,
                target.dim()
            )));
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(leaf) => return Ok(leaf),
                Node::Split {
                    var,
                    value,
                    left,
                    right,
                    ..
                } => {
                    i = if target.coord(*var) <= *value { *left } else { *right };
                }
            }
        }
    }

    /// Predicted POD basis at `target`: the basis of the leaf it falls in.
    pub fn predict(&self, target: &ParamPoint) -> Result<&PodBasis> {
        Ok(&self.route(target)?.basis)
    }
}

/// Grows a tree on `train` with depth-first greedy splitting.
pub fn fit(train: &SnapshotSet, cfg: &TreeConfig) -> Result<GrassmannTree> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let max = train
        .entries()
        .iter()
        .map(|e| e.snapshots.rows().min(e.snapshots.cols()))
        .min()
        .unwrap_or(0);
    if cfg.rank > max {
        return Err(Error::RankInfeasible {
            rank: cfg.rank,
            max,
        });
    }

    let bases: Vec<PodBasis> = train
        .entries()
        .par_iter()
        .map(|e| pod_basis(&e.snapshots, cfg.rank))
        .collect::<Result<_>>()?;
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

    let mut builder = Builder {
        cfg,
        nodes: Vec::new(),
        regions: 0,
    };
    builder.grow(canonical(&members))?;
    Ok(GrassmannTree::from_parts(builder.nodes, train.d(), cfg.clone()))
}

struct Builder<'c> {
    cfg: &'c TreeConfig,
    nodes: Vec<Node>,
    regions: usize,
}

impl Builder<'_> {
    fn grow(&mut self, members: Vec<Member<'_>>) -> Result<usize> {
        let index = self.nodes.len();
        // placeholder, replaced once the children exist
        self.nodes.push(Node::Split {
            var: 0,
            value: 0.0,
            left: 0,
            right: 0,
            node_cost: 0.0,
            split_cost: 0.0,
        });
        let found = search(&members, self.cfg)?;
        match found.split {
            Some(split) => {
                let (left, right) = partition(&members, split.var, split.value);
                let left = self.grow(left)?;
                let right = self.grow(right)?;
                self.nodes[index] = Node::Split {
                    var: split.var,
                    value: split.value,
                    left,
                    right,
                    node_cost: found.cost.expect("searched nodes carry a cost"),
                    split_cost: split.cost,
                };
            }
            None => {
                let basis = match found.basis {
                    Some(b) => b,
                    None => {
                        let blocks: Vec<&DenseMatrix> = members.iter().map(|m| m.snapshots).collect();
                        leaf_basis(&blocks, self.cfg)?
                    }
                };
                self.nodes[index] = Node::Leaf(Leaf {
                    region: self.regions,
                    basis,
                    members: members.iter().map(|m| m.id.to_string()).collect(),
                });
                self.regions += 1;
            }
        }
        Ok(index)
    }
}
