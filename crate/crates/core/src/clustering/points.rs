use alloc::vec::Vec;

use crate::correlation::{CorrelationMatrix, MatrixKind};
use crate::error::{Error, Result};
use crate::math;

/// Epoch matrices of one kind and one dimension, indexed by epoch order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    kind: MatrixKind,
    dim: usize,
    items: Vec<CorrelationMatrix>,
}

impl MatrixSet {
    pub fn new(items: Vec<CorrelationMatrix>) -> Result<Self> {
        let first = items.first().ok_or(Error::TooFewItems { required: 1, found: 0 })?;
        let (kind, dim) = (first.kind, first.dim());
        for item in &items {
            if item.kind != kind {
                return Err(Error::KindMismatch {
                    expected: kind.as_str(),
                    found: item.kind.as_str(),
                });
            }
            if item.values.nrows() != dim || item.values.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: item.values.nrows(),
                });
            }
        }
        Ok(Self { kind, dim, items })
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// K, the side of each matrix.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// K², the length of a flattened matrix.
    pub fn flattened_dim(&self) -> usize {
        self.dim * self.dim
    }

    pub fn items(&self) -> &[CorrelationMatrix] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Each matrix as a K²-vector (column-major, diagonal included).
    pub fn to_points(&self) -> PointSet {
        let mut data = Vec::with_capacity(self.len() * self.flattened_dim());
        for item in &self.items {
            data.extend_from_slice(item.values.as_slice());
        }
        PointSet {
            dim: self.flattened_dim(),
            data,
        }
    }
}

/// n points of equal dimension stored row after row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::InvalidArgument("flat data length is not a multiple of the dimension"));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        math::distance(self.point(i), self.point(j))
    }

    /// Element-wise mean of the listed points, summed in the given order.
    pub fn mean_of(&self, members: &[usize]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim];
        for &m in members {
            for (o, x) in out.iter_mut().zip(self.point(m)) {
                *o += x;
            }
        }
        let count = members.len() as f64;
        for o in &mut out {
            *o /= count;
        }
        out
    }

    /// Mean distance of the listed points to `centroid`.
    pub fn width(&self, members: &[usize], centroid: &[f64]) -> f64 {
        if members.is_empty() {
            return 0.0;
        }
        members
            .iter()
            .map(|&m| math::distance(self.point(m), centroid))
            .sum::<f64>()
            / members.len() as f64
    }
}

/// Euclidean (Frobenius) distance over all K² entries.
pub fn distance(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64> {
    if a.values.shape() != b.values.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(math::distance(a.values.as_slice(), b.values.as_slice()))
}
