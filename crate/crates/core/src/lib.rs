//! Regression trees on the Grassmann manifold for predicting parametric
//! POD bases.
//!
//! Given snapshot matrices `D(λ)` at training parameters `λ`, the crate
//! learns a piecewise-constant map `λ ↦ Φ(λ)` to rank-`r` POD bases.
//! A CART-style tree splits the parameter space so that, within each leaf,
//! the per-entry bases are close in the geodesic distance on `G(r, n)`; every
//! leaf stores one POD basis built from all of its snapshots.
//!
//! The modules follow the data flow:
//!
//! - [`matrix`], [`snapshot`], [`archive`]: dense matrices, snapshot sets and
//!   their on-disk format;
//! - [`pod`]: thin and randomized SVD, POD bases, projection error;
//! - [`grassmann`]: principal angles, distance, log/exp maps and
//!   tangent-space interpolation;
//! - [`tree`]: fitting, prediction and persistence of the regression tree;
//! - [`generators`]: heat-equation and nonlinear Schrödinger snapshot data;
//! - [`experiment`]: method comparison reports and the distance-correlation
//!   diagnostic.
//!
//! The guide in `book/` walks through each concept with runnable examples.

pub mod archive;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod grassmann;
pub mod matrix;
pub mod pod;
pub mod snapshot;
pub mod tree;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, ParamPoint};
pub use pod::PodBasis;
pub use snapshot::{SnapshotEntry, SnapshotSet};
pub use tree::{GrassmannTree, TreeConfig};

// Every Rust snippet in the guide runs as a doc-test, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/snapshots.md")]
    mod snapshots {}
    #[doc = include_str!("../../../book/src/pod.md")]
    mod pod {}
    #[doc = include_str!("../../../book/src/grassmann.md")]
    mod grassmann {}
    #[doc = include_str!("../../../book/src/tree.md")]
    mod tree {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
