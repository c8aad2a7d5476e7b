//! Snapshot datasets: one snapshot matrix per parameter setting.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, ParamPoint};

/// One simulation run: its parameter and its `n × n_T` snapshot matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotEntry {
    pub id: String,
    pub lambda: ParamPoint,
    pub snapshots: DenseMatrix,
}

/// A collection of runs sharing the spatial dimension `n` and parameter
/// dimension `d`, with unique ids. Insertion order is preserved.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    n: usize,
    d: usize,
    entries: Vec<SnapshotEntry>,
}

impl SnapshotSet {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::DimensionMismatch(format!(
                "spatial and parameter dimensions must be positive, got n={n}, d={d}"
            )));
        }
        Ok(SnapshotSet {
            n,
            d,
            entries: Vec::new(),
        })
    }

    /// Builds a set from entries, inferring `n` and `d` from the first one.
    pub fn from_entries(entries: Vec<SnapshotEntry>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::InvalidConfig("cannot infer dimensions of an empty set".into()))?;
        let mut set = SnapshotSet::new(first.snapshots.rows(), first.lambda.dim())?;
        for e in entries {
            set.push(e)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, entry: SnapshotEntry) -> Result<()> {
        if entry.snapshots.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "entry `{}` has {} rows, set has n={}",
                entry.id,
                entry.snapshots.rows(),
                self.n
            )));
        }
        if entry.lambda.dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "entry `{}` has a {}-dimensional parameter, set has d={}",
                entry.id,
                entry.lambda.dim(),
                self.d
            )));
        }
        if self.entries.iter().any(|e| e.id == entry.id) {
            return Err(Error::DuplicateId(entry.id));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SnapshotEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&SnapshotEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Splits into `(train, test)`: `train` holds exactly `train_ids`, `test`
    /// the rest. Both keep the original entry order.
    pub fn split_train_test<S: AsRef<str>>(&self, train_ids: &[S]) -> Result<(SnapshotSet, SnapshotSet)> {
        let mut wanted = HashSet::new();
        for id in train_ids {
            let id = id.as_ref();
            if self.get(id).is_none() {
                return Err(Error::UnknownId(id.to_string()));
            }
            if !wanted.insert(id) {
                return Err(Error::DuplicateId(id.to_string()));
            }
        }
        let mut train = SnapshotSet::new(self.n, self.d)?;
        let mut test = SnapshotSet::new(self.n, self.d)?;
        for e in &self.entries {
            if wanted.contains(e.id.as_str()) {
                train.entries.push(e.clone());
            } else {
                test.entries.push(e.clone());
            }
        }
        Ok((train, test))
    }
}
