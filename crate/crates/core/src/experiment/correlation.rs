//! Euclidean-vs-Riemannian distance correlation over a snapshot set.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::riemannian_distance;
use crate::pod::{pod_basis, PodBasis};
use crate::snapshot::SnapshotSet;

/// Relative standard deviation below which a distance set counts as
/// constant and the correlation as undefined.
pub const ZERO_VARIANCE_TOL: f64 = 1e-12;

/// Distances between entries `a` and `b` (indices into the set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistancePair {
    pub a: String,
    pub b: String,
    pub euclidean: f64,
    pub riemannian: f64,
}

/// All `N(N−1)/2` pairs, ordered by `(a, b)` with `a < b` in set order.
pub fn distance_pairs(set: &SnapshotSet, rank: usize) -> Result<Vec<DistancePair>> {
    if set.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: set.len(),
        });
    }
    let bases: Vec<PodBasis> = set
        .entries()
        .par_iter()
        .map(|e| pod_basis(&e.snapshots, rank))
        .collect::<Result<_>>()?;
    distance_pairs_with(set, &bases)
}

pub(crate) fn distance_pairs_with(set: &SnapshotSet, bases: &[PodBasis]) -> Result<Vec<DistancePair>> {
    let n = set.len();
    let index: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let entries = set.entries();
    index
        .par_iter()
        .map(|&(i, j)| {
            Ok(DistancePair {
                a: entries[i].id.clone(),
                b: entries[j].id.clone(),
                euclidean: entries[i].lambda.distance(&entries[j].lambda),
                riemannian: riemannian_distance(&bases[i], &bases[j])?,
            })
        })
        .collect()
}

/// Pearson correlation coefficient; errors if either sample is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "samples of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let constant = |ss: f64, v: &[f64]| {
        let scale = v.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        (ss / n).sqrt() <= ZERO_VARIANCE_TOL * scale
    };
    if constant(sxx, x) {
        return Err(Error::UndefinedCorrelation("Euclidean distances have zero variance".into()));
    }
    if constant(syy, y) {
        return Err(Error::UndefinedCorrelation("Riemannian distances have zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation between parameter-space and subspace distances.
pub fn correlation_diagnostic(set: &SnapshotSet, rank: usize) -> Result<f64> {
    correlation_of(&distance_pairs(set, rank)?)
}

pub fn correlation_of(pairs: &[DistancePair]) -> Result<f64> {
    let x: Vec<f64> = pairs.iter().map(|p| p.euclidean).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.riemannian).collect();
    pearson(&x, &y)
}

/// Writes `a,b,euclidean,riemannian` rows.
pub fn write_scatter(path: &Path, pairs: &[DistancePair]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for p in pairs {
        w.serialize(p).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::format(path, e.to_string())
    }
}
