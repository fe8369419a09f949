//! Reduced-rank correlation matrices: the market-mode dyad is removed from
//! the epoch data matrix before the correlation is formed.
//!
//! Two routes exist. The covariance route removes the top dyad of the
//! centred matrix A, giving B = A − α u vᵀ; the correlation route removes the
//! top dyad of the standardized matrix M, giving L = M − μ x yᵀ. In both
//! cases the new matrix is renormalized by its own row volatilities. The
//! closed forms work on the K x K matrices instead and must agree with the
//! data-matrix routes to rounding.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::correlation::{gram_over_t, CorrelationMatrix, MatrixKind};
use crate::epoch::NormalizedEpoch;
use crate::error::{Error, Result};
use crate::math;
use crate::spectral::svd_thin;

/// Reduced volatility below this fraction of the original one counts as zero.
const ZERO_REDUCED_VARIANCE: f64 = 1e-10;
/// Relative gap below which the two largest singular values count as tied.
pub const TOP_TIE_TOLERANCE: f64 = 1e-10;

/// Outcome of one reduction route.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRankPair {
    /// `ReducedCov` (data matrix B) or `ReducedCorr` (data matrix L).
    pub route: MatrixKind,
    /// B or L, K x T.
    pub data_matrix: DMatrix<f64>,
    /// σ^B or σ^L per row.
    pub volatilities: Vec<f64>,
    /// Σ_B or Σ_L = (1/T) X Xᵀ of the data matrix.
    pub covariance: DMatrix<f64>,
    /// C_B or C_L.
    pub correlation: CorrelationMatrix,
    /// α_max (or μ_max) of the removed dyad.
    pub removed_singular_value: f64,
    /// The removed dyad is not unique because α_max is tied.
    pub top_degenerate: bool,
}

/// The dyad of the largest singular value of a K x T matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TopDyad {
    pub singular_value: f64,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
    pub degenerate: bool,
}

pub fn top_dyad(x: &DMatrix<f64>) -> Result<TopDyad> {
    let s = svd_thin(x)?;
    let degenerate = s.top_is_degenerate(TOP_TIE_TOLERANCE);
    Ok(TopDyad {
        singular_value: s.singular_values[0],
        left: s.left.column(0).into_owned(),
        right: s.right.column(0).into_owned(),
        degenerate,
    })
}

/// Covariance route: removes the top dyad of A.
pub fn reduce_cov(epoch: &NormalizedEpoch) -> Result<ReducedRankPair> {
    reduce(
        &epoch.centered,
        &epoch.volatility,
        epoch.epoch,
        MatrixKind::ReducedCov,
    )
}

/// Correlation route: removes the top dyad of M.
pub fn reduce_corr(epoch: &NormalizedEpoch) -> Result<ReducedRankPair> {
    let ones = alloc::vec![1.0; epoch.num_assets()];
    reduce(&epoch.standardized, &ones, epoch.epoch, MatrixKind::ReducedCorr)
}

fn reduce(x: &DMatrix<f64>, scale: &[f64], epoch: usize, route: MatrixKind) -> Result<ReducedRankPair> {
    let dyad = top_dyad(x)?;
    if dyad.degenerate {
        log::warn!(
            "epoch {epoch}: largest singular value is tied, removing the first dyad in sort order"
        );
    }
    let data_matrix = x - &dyad.left * dyad.right.transpose() * dyad.singular_value;
    let covariance = gram_over_t(&data_matrix);
    let volatilities = reduced_volatilities(&covariance, scale, epoch)?;
    let correlation = rescale(&covariance, &volatilities);
    Ok(ReducedRankPair {
        route,
        data_matrix,
        volatilities,
        covariance,
        correlation: CorrelationMatrix {
            values: correlation,
            kind: route,
            epoch,
        },
        removed_singular_value: dyad.singular_value,
        top_degenerate: dyad.degenerate,
    })
}

/// Closed form on the K x K level: R = base − (α²/T) u uᵀ, then
/// C_ij = R_ij / √(R_ii R_jj).
///
/// `base` is Σ (with the top triplet of A) or C (with that of M). Returns the
/// reduced correlation matrix; a vanishing diagonal of R is reported as
/// [`Error::ZeroReducedVariance`] with epoch 0.
pub fn reduced_correlation_closed_form(
    base: &DMatrix<f64>,
    singular_value: f64,
    left: &DVector<f64>,
    length: usize,
) -> Result<DMatrix<f64>> {
    let k = base.nrows();
    if base.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: base.ncols(),
        });
    }
    if left.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: left.len(),
        });
    }
    let factor = singular_value * singular_value / length as f64;
    let mut reduced = base.clone();
    for i in 0..k {
        for j in 0..k {
            reduced[(i, j)] -= factor * left[i] * left[j];
        }
    }
    let scale: Vec<f64> = base.diagonal().iter().map(|v| math::sqrt(v.max(0.0))).collect();
    let volatilities = reduced_volatilities(&reduced, &scale, 0)?;
    Ok(rescale(&reduced, &volatilities))
}

fn reduced_volatilities(covariance: &DMatrix<f64>, scale: &[f64], epoch: usize) -> Result<Vec<f64>> {
    covariance
        .diagonal()
        .iter()
        .zip(scale)
        .enumerate()
        .map(|(row, (&var, &s))| {
            let sigma = math::sqrt(var.max(0.0));
            if sigma > ZERO_REDUCED_VARIANCE * s {
                Ok(sigma)
            } else {
                Err(Error::ZeroReducedVariance {
                    epoch,
                    row,
                    ticker: None,
                })
            }
        })
        .collect()
}

/// σ⁻¹ R σ⁻¹ with the diagonal pinned to 1 and exact symmetry.
fn rescale(covariance: &DMatrix<f64>, sigma: &[f64]) -> DMatrix<f64> {
    let k = covariance.nrows();
    let mut out = DMatrix::zeros(k, k);
    for i in 0..k {
        out[(i, i)] = 1.0;
        for j in (i + 1)..k {
            let v = covariance[(i, j)] / (sigma[i] * sigma[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}
