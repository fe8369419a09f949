//! Disjoint epochs of the return matrix and their row normalizations.

use alloc::vec::Vec;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::ReturnMatrix;
use crate::math;

/// Position and timestamps of one window of return days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochInfo {
    /// 1-based epoch number n_ep; for sliding windows, the 1-based offset.
    pub index: usize,
    /// 0-based first column in the return matrix.
    pub start: usize,
    pub length: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Date of column `start + ceil(T/2) - 1`, the centre of the window.
    pub mid_date: NaiveDate,
}

/// A K x T slice of the return matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochWindow {
    pub info: EpochInfo,
    pub raw: DMatrix<f64>,
}

/// Result of cutting the return matrix into disjoint epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSlicing {
    pub windows: Vec<EpochWindow>,
    /// Trailing days (T_tot mod T) that do not fill a whole epoch.
    pub dropped_days: usize,
}

pub const MIN_EPOCH_LENGTH: usize = 3;

impl EpochWindow {
    /// Window of `length` columns starting at 0-based column `start`.
    pub fn from_columns(returns: &ReturnMatrix, index: usize, start: usize, length: usize) -> Self {
        let dates = returns.dates();
        let mid = start + length.div_ceil(2) - 1;
        Self {
            info: EpochInfo {
                index,
                start,
                length,
                start_date: dates[start],
                end_date: dates[start + length - 1],
                mid_date: dates[mid],
            },
            raw: returns.values().columns(start, length).into_owned(),
        }
    }

    pub fn len(&self) -> usize {
        self.info.length
    }

    pub fn is_empty(&self) -> bool {
        self.info.length == 0
    }
}

pub(crate) fn check_length(length: usize, available: usize) -> Result<()> {
    if length < MIN_EPOCH_LENGTH {
        return Err(Error::EpochTooShort { length });
    }
    if length > available {
        return Err(Error::EpochTooLong { length, available });
    }
    Ok(())
}

/// Cuts G into N_ep = floor(T_tot / T) disjoint epochs of T days.
pub fn slice_epochs(returns: &ReturnMatrix, length: usize) -> Result<EpochSlicing> {
    let total = returns.num_days();
    check_length(length, total)?;
    let count = total / length;
    let windows = (0..count)
        .map(|n| EpochWindow::from_columns(returns, n + 1, n * length, length))
        .collect();
    Ok(EpochSlicing {
        windows,
        dropped_days: total % length,
    })
}

/// Row-centred and row-standardized versions of an epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedEpoch {
    pub epoch: usize,
    /// A: each row shifted to mean zero.
    pub centered: DMatrix<f64>,
    /// M: each row shifted to mean zero and scaled to unit (population) sd.
    pub standardized: DMatrix<f64>,
    /// Per-row drift mu_i.
    pub drift: Vec<f64>,
    /// Per-row volatility sigma_i, divisor T.
    pub volatility: Vec<f64>,
}

impl NormalizedEpoch {
    pub fn num_assets(&self) -> usize {
        self.centered.nrows()
    }

    pub fn len(&self) -> usize {
        self.centered.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.ncols() == 0
    }
}

/// Relative size below which a row's volatility counts as zero.
const ZERO_VOLATILITY: f64 = 1e-12;

/// Computes drift and population volatility per row and derives A and M.
///
/// A row whose volatility vanishes (a constant series, e.g. a halted stock)
/// is a domain error naming the row.
pub fn normalize(window: &EpochWindow) -> Result<NormalizedEpoch> {
    let raw = &window.raw;
    let (rows, days) = raw.shape();
    let t = days as f64;
    let mut centered = raw.clone();
    let mut standardized = raw.clone();
    let mut drift = Vec::with_capacity(rows);
    let mut volatility = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = raw.row(i);
        let mu = row.iter().sum::<f64>() / t;
        let var = row.iter().map(|g| (g - mu) * (g - mu)).sum::<f64>() / t;
        let sigma = math::sqrt(var);
        let scale = row.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if sigma.is_nan() || sigma <= ZERO_VOLATILITY * scale {
            return Err(Error::ZeroVolatility {
                epoch: window.info.index,
                row: i,
                ticker: None,
            });
        }
        for j in 0..days {
            let a = raw[(i, j)] - mu;
            centered[(i, j)] = a;
            standardized[(i, j)] = a / sigma;
        }
        drift.push(mu);
        volatility.push(sigma);
    }
    Ok(NormalizedEpoch {
        epoch: window.info.index,
        centered,
        standardized,
        drift,
        volatility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Asset;
    use alloc::vec;

    fn returns(rows: usize, days: usize) -> ReturnMatrix {
        let start = NaiveDate::from_ymd_opt(2002, 1, 2).unwrap();
        let dates = (0..days as u64)
            .map(|d| start.checked_add_days(chrono::Days::new(d)).unwrap())
            .collect();
        let assets = (0..rows)
            .map(|i| Asset {
                ticker: alloc::format!("T{i}"),
                sector: None,
                subsector: None,
            })
            .collect();
        let values = DMatrix::from_fn(rows, days, |i, t| ((i * 7 + t * 3) % 11) as f64 * 0.01);
        ReturnMatrix::new(values, assets, dates).unwrap()
    }

    #[test]
    fn fifteen_year_history_gives_87_epochs() {
        let r = returns(2, 3654);
        let s = slice_epochs(&r, 42).unwrap();
        assert_eq!(s.windows.len(), 87);
        assert_eq!(s.dropped_days, 0);
    }

    #[test]
    fn remainder_days_are_dropped() {
        let r = returns(2, 10);
        let s = slice_epochs(&r, 4).unwrap();
        assert_eq!(s.windows.len(), 2);
        assert_eq!(s.dropped_days, 2);
        assert_eq!(s.windows[1].info.start, 4);
        assert_eq!(s.windows[1].info.index, 2);
        assert_eq!(s.windows[1].raw.column(0), r.values().column(4));
        // ceil(4/2) = 2 -> second column of the window.
        assert_eq!(s.windows[1].info.mid_date, r.dates()[5]);
    }

    #[test]
    fn odd_length_mid_date_is_the_centre() {
        let r = returns(2, 10);
        let s = slice_epochs(&r, 5).unwrap();
        assert_eq!(s.windows[0].info.mid_date, r.dates()[2]);
    }

    #[test]
    fn epoch_length_bounds() {
        let r = returns(2, 5);
        assert_eq!(
            slice_epochs(&r, 6).unwrap_err(),
            Error::EpochTooLong {
                length: 6,
                available: 5
            }
        );
        assert_eq!(slice_epochs(&r, 2).unwrap_err(), Error::EpochTooShort { length: 2 });
    }

    fn window(rows: &[&[f64]]) -> EpochWindow {
        let days = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        EpochWindow {
            info: EpochInfo {
                index: 1,
                start: 0,
                length: days,
                start_date: d,
                end_date: d,
                mid_date: d,
            },
            raw: DMatrix::from_row_slice(rows.len(), days, &flat),
        }
    }

    #[test]
    fn normalize_hand_example() {
        let n = normalize(&window(&[&[1.0, 2.0, 3.0]])).unwrap();
        assert_eq!(n.drift, vec![2.0]);
        assert!((n.volatility[0] - (2.0_f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(n.centered.row(0).iter().copied().collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
        let m: Vec<f64> = n.standardized.row(0).iter().copied().collect();
        let mean = m.iter().sum::<f64>() / 3.0;
        let sd = (m.iter().map(|x| x * x).sum::<f64>() / 3.0).sqrt();
        assert!(mean.abs() < 1e-15);
        assert!((sd - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_row_is_rejected() {
        let err = normalize(&window(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]])).unwrap_err();
        assert_eq!(
            err,
            Error::ZeroVolatility {
                epoch: 1,
                row: 1,
                ticker: None
            }
        );
        let err = normalize(&window(&[&[0.1, 0.1, 0.1]])).unwrap_err();
        assert!(matches!(err, Error::ZeroVolatility { .. }));
    }
}
