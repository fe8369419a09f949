use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::points::{MatrixSet, PointSet};
use crate::error::{Error, Result};
use crate::spectral::svd_thin;

/// Epoch matrices expressed in the principal axes of their own scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// n points of length min(n − 1, K²).
    pub coordinates: PointSet,
    /// K² x m matrix of principal axes (eigenvectors of Σ_C), one per column.
    pub basis: DMatrix<f64>,
    /// Eigenvalues of Σ_C = (1/n) F̃ F̃ᵀ for the retained axes, descending.
    pub eigenvalues: Vec<f64>,
}

/// Centres the flattened matrices across epochs and rotates them onto the
/// non-trivial principal axes. Centring is a translation and the axes are
/// orthonormal and span the centred data, so pairwise distances survive.
pub fn pca_project(set: &MatrixSet) -> Result<PcaProjection> {
    let n = set.len();
    if n < 2 {
        return Err(Error::TooFewItems { required: 2, found: n });
    }
    let points = set.to_points();
    let dim = points.dim();
    let mean = points.mean_of(&(0..n).collect::<Vec<_>>());
    let centered = DMatrix::from_fn(n, dim, |i, j| points.point(i)[j] - mean[j]);
    let svd = svd_thin(&centered)?;
    let m = (n - 1).min(dim);
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        for a in 0..m {
            data.push(svd.left[(i, a)] * svd.singular_values[a]);
        }
    }
    Ok(PcaProjection {
        coordinates: PointSet::from_flat(m, data)?,
        basis: svd.right.columns(0, m).into_owned(),
        eigenvalues: svd.singular_values[..m].iter().map(|s| s * s / n as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{CorrelationMatrix, MatrixKind};

    fn set(n: usize, k: usize) -> MatrixSet {
        let items = (0..n)
            .map(|e| {
                let values = DMatrix::from_fn(k, k, |i, j| {
                    if i == j {
                        1.0
                    } else {
                        let (a, b) = (i.min(j), i.max(j));
                        libm::sin((a * 31 + b * 17 + e * 7) as f64) * 0.5
                    }
                });
                CorrelationMatrix {
                    values,
                    kind: MatrixKind::Standard,
                    epoch: e + 1,
                }
            })
            .collect();
        MatrixSet::new(items).unwrap()
    }

    #[test]
    fn preserves_distances() {
        let s = set(6, 5);
        let p = pca_project(&s).unwrap();
        assert_eq!(p.coordinates.dim(), 5);
        let raw = s.to_points();
        for i in 0..6 {
            for j in 0..6 {
                assert!((raw.distance(i, j) - p.coordinates.distance(i, j)).abs() < 1e-8);
            }
        }
        assert!(p.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn small_matrices_keep_all_axes() {
        // K² = 4 < n − 1.
        let p = pca_project(&set(8, 2)).unwrap();
        assert_eq!(p.coordinates.dim(), 4);
    }
}
