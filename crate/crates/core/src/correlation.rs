//! Pearson correlation, covariance, de-meaning and the mean-correlation scalar.

use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::epoch::NormalizedEpoch;
use crate::error::{Error, Result};

/// Which construction produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatrixKind {
    /// Pearson correlation C = M Mᵀ / T.
    Standard,
    /// Reduced-rank correlation from the covariance route (data matrix B).
    ReducedCov,
    /// Reduced-rank correlation from the correlation route (data matrix L).
    ReducedCorr,
    /// Standard correlation with its lower-triangle mean removed and a zero
    /// diagonal. Not a correlation matrix.
    Demeaned,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 4] = [
        MatrixKind::Standard,
        MatrixKind::ReducedCov,
        MatrixKind::ReducedCorr,
        MatrixKind::Demeaned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatrixKind::Standard => "standard",
            MatrixKind::ReducedCov => "reduced_cov",
            MatrixKind::ReducedCorr => "reduced_corr",
            MatrixKind::Demeaned => "demeaned",
        }
    }

    /// Whether entries are bounded correlations with a unit diagonal.
    pub fn is_correlation(self) -> bool {
        !matches!(self, MatrixKind::Demeaned)
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MatrixKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(Error::InvalidArgument("unknown matrix kind"))
    }
}

/// A K x K matrix attached to an epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: DMatrix<f64>,
    pub kind: MatrixKind,
    /// 1-based epoch number (0 when not tied to an epoch).
    pub epoch: usize,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn mean_correlation(&self) -> f64 {
        mean_correlation(&self.values)
    }
}

/// (1/T) X Xᵀ, computed on the upper triangle and mirrored so the result is
/// exactly symmetric.
pub(crate) fn gram_over_t(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, t) = x.shape();
    let mut out = DMatrix::zeros(k, k);
    for i in 0..k {
        let ri = x.row(i);
        for j in i..k {
            let v = ri.dot(&x.row(j)) / t as f64;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// C = (1/T) M Mᵀ for a row-standardized M, with the diagonal pinned to 1.
pub fn correlation_from_standardized(standardized: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = gram_over_t(standardized);
    c.fill_diagonal(1.0);
    c
}

/// Pearson correlation matrix of an epoch.
pub fn pearson(epoch: &NormalizedEpoch) -> CorrelationMatrix {
    CorrelationMatrix {
        values: correlation_from_standardized(&epoch.standardized),
        kind: MatrixKind::Standard,
        epoch: epoch.epoch,
    }
}

/// Σ = (1/T) A Aᵀ for a row-centred A.
pub fn covariance(centered: &DMatrix<f64>) -> DMatrix<f64> {
    gram_over_t(centered)
}

/// Subtracts the strictly-lower-triangle mean from every off-diagonal entry
/// and zeroes the diagonal.
pub fn demean_matrix(c: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    if c.kind != MatrixKind::Standard {
        return Err(Error::KindMismatch {
            expected: MatrixKind::Standard.as_str(),
            found: c.kind.as_str(),
        });
    }
    let k = c.dim();
    let mean = lower_triangle_mean(&c.values);
    let mut values = c.values.clone();
    for i in 0..k {
        for j in 0..k {
            values[(i, j)] = if i == j { 0.0 } else { c.values[(i, j)] - mean };
        }
    }
    Ok(CorrelationMatrix {
        values,
        kind: MatrixKind::Demeaned,
        epoch: c.epoch,
    })
}

fn lower_triangle_mean(values: &DMatrix<f64>) -> f64 {
    let k = values.nrows();
    let mut sum = 0.0;
    for i in 1..k {
        for j in 0..i {
            sum += values[(i, j)];
        }
    }
    sum / (k * (k - 1) / 2) as f64
}

/// Arithmetic mean of the strictly off-diagonal entries; NaN when K < 2.
pub fn mean_correlation(values: &DMatrix<f64>) -> f64 {
    let k = values.nrows();
    if k < 2 {
        return f64::NAN;
    }
    let total: f64 = values.iter().sum();
    let diagonal: f64 = values.diagonal().iter().sum();
    (total - diagonal) / (k * (k - 1)) as f64
}
