//! Epoch matrices of a chosen kind and the mean-correlation series.

use alloc::string::ToString;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::correlation::{demean_matrix, pearson, CorrelationMatrix, MatrixKind};
use crate::epoch::{check_length, normalize, slice_epochs, EpochInfo, EpochWindow};
use crate::error::Result;
use crate::ingest::ReturnMatrix;
use crate::reduce::{reduce_corr, reduce_cov};

/// One epoch's matrix and whether its market-mode dyad was ambiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMatrix {
    pub matrix: CorrelationMatrix,
    /// Reduced kinds only: the two largest singular values were tied.
    pub top_degenerate: bool,
}

/// Builds the matrix of the requested kind for one window.
///
/// Zero-volatility rows are reported by row index; the batch functions below
/// attach ticker names.
pub fn epoch_matrix(window: &EpochWindow, kind: MatrixKind) -> Result<EpochMatrix> {
    let normalized = normalize(window)?;
    let (matrix, top_degenerate) = match kind {
        MatrixKind::Standard => (pearson(&normalized), false),
        MatrixKind::Demeaned => (demean_matrix(&pearson(&normalized))?, false),
        MatrixKind::ReducedCov => {
            let pair = reduce_cov(&normalized)?;
            (pair.correlation, pair.top_degenerate)
        }
        MatrixKind::ReducedCorr => {
            let pair = reduce_corr(&normalized)?;
            (pair.correlation, pair.top_degenerate)
        }
    };
    Ok(EpochMatrix {
        matrix,
        top_degenerate,
    })
}

/// All disjoint-epoch matrices of one kind.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMatrices {
    pub kind: MatrixKind,
    pub infos: Vec<EpochInfo>,
    pub matrices: Vec<CorrelationMatrix>,
    /// Trailing return days not covered by a full epoch.
    pub dropped_days: usize,
    /// 1-based epochs whose top singular value was tied.
    pub degenerate_top_epochs: Vec<usize>,
}

impl EpochMatrices {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn mean_correlations(&self) -> Vec<f64> {
        self.matrices.iter().map(CorrelationMatrix::mean_correlation).collect()
    }
}

/// Slices `returns` into epochs of `length` days and builds one matrix each.
pub fn epoch_matrices(returns: &ReturnMatrix, length: usize, kind: MatrixKind) -> Result<EpochMatrices> {
    let slicing = slice_epochs(returns, length)?;
    let mut infos = Vec::with_capacity(slicing.windows.len());
    let mut matrices = Vec::with_capacity(slicing.windows.len());
    let mut degenerate_top_epochs = Vec::new();
    for window in &slicing.windows {
        let built = epoch_matrix(window, kind).map_err(|e| e.with_ticker(|row| returns.ticker(row).to_string()))?;
        if built.top_degenerate {
            degenerate_top_epochs.push(window.info.index);
        }
        infos.push(window.info.clone());
        matrices.push(built.matrix);
    }
    Ok(EpochMatrices {
        kind,
        infos,
        matrices,
        dropped_days: slicing.dropped_days,
        degenerate_top_epochs,
    })
}

/// One point of the sliding mean-correlation series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingPoint {
    /// 1-based offset of the window's first return day.
    pub offset: usize,
    /// Centre date of the window.
    pub date: NaiveDate,
    pub mean_correlation: f64,
}

/// Mean correlation of the window of `length` days starting at 1-based
/// `offset`. Shares the code path of [`epoch_matrices`], so at disjoint
/// offsets the values agree bit for bit.
pub fn sliding_point(returns: &ReturnMatrix, offset: usize, length: usize, kind: MatrixKind) -> Result<SlidingPoint> {
    check_length(length, returns.num_days())?;
    if offset == 0 || offset + length - 1 > returns.num_days() {
        return Err(crate::Error::InvalidArgument("window offset out of range"));
    }
    let window = EpochWindow::from_columns(returns, offset, offset - 1, length);
    let built = epoch_matrix(&window, kind).map_err(|e| e.with_ticker(|row| returns.ticker(row).to_string()))?;
    Ok(SlidingPoint {
        offset,
        date: window.info.mid_date,
        mean_correlation: built.matrix.mean_correlation(),
    })
}

/// Windows advanced by one trading day: T_tot − T + 1 points.
///
/// A zero-volatility error carries the window's 1-based offset as its epoch.
pub fn sliding_mean_correlation(returns: &ReturnMatrix, length: usize, kind: MatrixKind) -> Result<Vec<SlidingPoint>> {
    check_length(length, returns.num_days())?;
    (1..=returns.num_days() - length + 1)
        .map(|offset| sliding_point(returns, offset, length, kind))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Asset;
    use crate::Error;
    use nalgebra::DMatrix;

    fn returns(k: usize, days: usize) -> ReturnMatrix {
        let start = NaiveDate::from_ymd_opt(2004, 3, 1).unwrap();
        let dates = (0..days as u64)
            .map(|d| start.checked_add_days(chrono::Days::new(d)).unwrap())
            .collect();
        let assets = (0..k)
            .map(|i| Asset {
                ticker: alloc::format!("S{i}"),
                sector: None,
                subsector: None,
            })
            .collect();
        let values = DMatrix::from_fn(k, days, |i, t| {
            let x = libm::sin(i as f64 * 12.9898 + t as f64 * 78.233) * 43_758.545_3;
            (x - libm::floor(x) - 0.5) * 0.02 + 0.004 * (((t * 13) % 7) as f64 - 3.0)
        });
        ReturnMatrix::new(values, assets, dates).unwrap()
    }

    #[test]
    fn sliding_hits_epoch_values_exactly() {
        let r = returns(8, 23);
        for kind in MatrixKind::ALL {
            let epochs = epoch_matrices(&r, 5, kind).unwrap();
            assert_eq!(epochs.len(), 4);
            assert_eq!(epochs.dropped_days, 3);
            let series = sliding_mean_correlation(&r, 5, kind).unwrap();
            assert_eq!(series.len(), 23 - 5 + 1);
            for (n, value) in epochs.mean_correlations().into_iter().enumerate() {
                let point = series[n * 5];
                assert_eq!(point.offset, n * 5 + 1);
                assert_eq!(point.mean_correlation.to_bits(), value.to_bits());
                assert_eq!(point.date, epochs.infos[n].mid_date);
            }
        }
    }

    #[test]
    fn full_length_window_is_a_single_point() {
        let r = returns(6, 12);
        let series = sliding_mean_correlation(&r, 12, MatrixKind::Standard).unwrap();
        assert_eq!(series.len(), 1);
        let whole = epoch_matrices(&r, 12, MatrixKind::Standard).unwrap();
        assert_eq!(series[0].mean_correlation, whole.matrices[0].mean_correlation());
    }

    #[test]
    fn zero_volatility_names_the_ticker() {
        let mut r = returns(4, 10);
        let mut values = r.values().clone();
        for t in 0..5 {
            values[(2, t)] = 0.0;
        }
        r = ReturnMatrix::new(values, r.assets().to_vec(), r.dates().to_vec()).unwrap();
        let err = epoch_matrices(&r, 5, MatrixKind::Standard).unwrap_err();
        assert_eq!(
            err,
            Error::ZeroVolatility {
                epoch: 1,
                row: 2,
                ticker: Some("S2".into())
            }
        );
    }
}
