//! Dense column-major matrices and parameter points.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// A dense real matrix stored column-major.
///
/// Every entry is finite; constructors reject NaN and infinities. Each column
/// is contiguous in memory, so a snapshot (one time step) is a plain slice.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major data.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix entry ({}, {})",
                pos % rows,
                pos / rows
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Builds a matrix entry by entry. Panics if `f` yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self::from_column_major(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    /// Builds a matrix whose columns are the given slices.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let data = columns.iter().flat_map(|c| c.iter().copied()).collect();
        Self::from_column_major(rows, columns.len(), data)
    }

    /// Copies a faer matrix, rejecting non-finite entries.
    pub fn from_faer(m: MatRef<'_, f64>) -> Result<Self> {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            data.extend(m.col(j).iter().copied());
        }
        Self::from_column_major(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[j * self.rows + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Zero-copy faer view.
    pub fn as_faer(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn to_faer(&self) -> Mat<f64> {
        self.as_faer().to_owned()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Self::from_faer((self.as_faer() * rhs.as_faer()).as_ref())
    }

    /// The first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        assert!(k >= 1 && k <= self.cols, "column count out of range");
        DenseMatrix {
            rows: self.rows,
            cols: k,
            data: self.data[..k * self.rows].to_vec(),
        }
    }

    /// Horizontal concatenation `[A₁, A₂, …]`.
    pub fn hconcat(blocks: &[&DenseMatrix]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::DimensionMismatch("nothing to concatenate".into()))?;
        let rows = first.rows;
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch(format!(
                "cannot concatenate blocks with {} and {} rows",
                rows, b.rows
            )));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entry-wise difference `self - rhs`.
    pub fn sub(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Self::from_column_major(self.rows, self.cols, data)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|v| v * factor).collect();
        Self::from_column_major(self.rows, self.cols, data).expect("scaling produced a non-finite value")
    }
}

/// A point λ in the d-dimensional parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch(
                "parameter point needs at least one coordinate".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("parameter point".into()));
        }
        Ok(ParamPoint(coords))
    }

    /// Shorthand for a one-dimensional parameter.
    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![value])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.0[j]
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &ParamPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}
