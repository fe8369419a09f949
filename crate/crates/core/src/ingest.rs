//! Price panels, log returns and sector ordering of the data matrix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math;
use crate::sector::Sector;

/// One adjusted close for one ticker on one trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceObservation {
    pub ticker: String,
    pub date: NaiveDate,
    pub close: f64,
}

/// A complete K x (T_tot + 1) panel of strictly positive adjusted closes.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    prices: DMatrix<f64>,
}

/// Tickers removed because they do not cover the common calendar.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DropReport {
    pub dropped: Vec<DroppedTicker>,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedTicker {
    pub ticker: String,
    /// Calendar days inside the common range without a price.
    pub missing_dates: usize,
}

impl DropReport {
    pub fn is_empty(&self) -> bool {
        self.dropped.is_empty()
    }
}

impl PriceTable {
    /// Builds a table after checking every invariant: matching shape, strictly
    /// increasing dates, at least two of them, and strictly positive prices.
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, prices: DMatrix<f64>) -> Result<Self> {
        if tickers.is_empty() {
            return Err(Error::EmptyPrices);
        }
        if prices.nrows() != tickers.len() || prices.ncols() != dates.len() {
            return Err(Error::ShapeMismatch {
                rows: prices.nrows(),
                cols: prices.ncols(),
                tickers: tickers.len(),
                dates: dates.len(),
            });
        }
        if dates.len() < 2 {
            return Err(Error::TooFewDates { found: dates.len() });
        }
        if let Some(position) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnorderedDates { position: position + 1 });
        }
        for (i, ticker) in tickers.iter().enumerate() {
            for (t, date) in dates.iter().enumerate() {
                let price = prices[(i, t)];
                // `!(p > 0)` also rejects NaN.
                if !price.is_finite() || price <= 0.0 {
                    return Err(Error::NonPositivePrice {
                        ticker: ticker.clone(),
                        date: *date,
                        price,
                    });
                }
            }
        }
        Ok(Self {
            tickers,
            dates,
            prices,
        })
    }

    /// Assembles a complete panel from long-format observations.
    ///
    /// The common range runs from the latest first date to the earliest last
    /// date over all tickers. Its calendar is the union of observed dates
    /// inside that range; tickers lacking any calendar day are dropped and
    /// listed in the returned report. Ticker order follows first appearance.
    pub fn from_observations<I>(observations: I) -> Result<(Self, DropReport)>
    where
        I: IntoIterator<Item = PriceObservation>,
    {
        let mut order: Vec<String> = Vec::new();
        let mut series: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
        for obs in observations {
            if !obs.close.is_finite() || obs.close <= 0.0 {
                return Err(Error::NonPositivePrice {
                    ticker: obs.ticker,
                    date: obs.date,
                    price: obs.close,
                });
            }
            let entry = series.entry(obs.ticker.clone()).or_insert_with(|| {
                order.push(obs.ticker.clone());
                BTreeMap::new()
            });
            if entry.insert(obs.date, obs.close).is_some() {
                return Err(Error::DuplicateObservation {
                    ticker: obs.ticker,
                    date: obs.date,
                });
            }
        }
        if order.is_empty() {
            return Err(Error::EmptyPrices);
        }

        let first = series
            .values()
            .filter_map(|s| s.keys().next().copied())
            .max()
            .ok_or(Error::EmptyPrices)?;
        let last = series
            .values()
            .filter_map(|s| s.keys().next_back().copied())
            .min()
            .ok_or(Error::EmptyPrices)?;
        if first > last {
            return Err(Error::EmptyDateRange);
        }

        let calendar: BTreeSet<NaiveDate> = series
            .values()
            .flat_map(|s| s.range(first..=last).map(|(d, _)| *d))
            .collect();
        let calendar: Vec<NaiveDate> = calendar.into_iter().collect();

        let mut report = DropReport {
            dropped: Vec::new(),
            first_date: Some(first),
            last_date: Some(last),
        };
        let mut kept = Vec::new();
        for ticker in order {
            let s = &series[&ticker];
            let present = s.range(first..=last).count();
            if present == calendar.len() {
                kept.push(ticker);
            } else {
                report.dropped.push(DroppedTicker {
                    ticker,
                    missing_dates: calendar.len() - present,
                });
            }
        }
        if kept.is_empty() {
            return Err(Error::NoCompleteTicker);
        }
        if calendar.len() < 2 {
            return Err(Error::TooFewDates {
                found: calendar.len(),
            });
        }

        let prices = DMatrix::from_fn(kept.len(), calendar.len(), |i, t| {
            series[&kept[i]][&calendar[t]]
        });
        Ok((Self::new(kept, calendar, prices)?, report))
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn num_tickers(&self) -> usize {
        self.tickers.len()
    }
}

/// Identity and classification of one data-matrix row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Asset {
    pub ticker: String,
    pub sector: Option<Sector>,
    pub subsector: Option<String>,
}

/// The K x T_tot matrix G of daily log returns.
///
/// Column `t` holds the return from `dates[t] - 1 trading day` to `dates[t]`,
/// i.e. it is stamped with the later of the two price dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    values: DMatrix<f64>,
    assets: Vec<Asset>,
    dates: Vec<NaiveDate>,
    permutation: Vec<usize>,
}

impl ReturnMatrix {
    /// Builds a return matrix directly (used when reloading a stored stage).
    pub fn new(values: DMatrix<f64>, assets: Vec<Asset>, dates: Vec<NaiveDate>) -> Result<Self> {
        if values.nrows() != assets.len() || values.ncols() != dates.len() {
            return Err(Error::ShapeMismatch {
                rows: values.nrows(),
                cols: values.ncols(),
                tickers: assets.len(),
                dates: dates.len(),
            });
        }
        if assets.is_empty() {
            return Err(Error::EmptyPrices);
        }
        if let Some(position) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnorderedDates { position: position + 1 });
        }
        let permutation = (0..assets.len()).collect();
        Ok(Self {
            values,
            assets,
            dates,
            permutation,
        })
    }

    /// Replaces the recorded pre-sort row indices (one per row).
    pub fn with_permutation(mut self, permutation: Vec<usize>) -> Result<Self> {
        if permutation.len() != self.assets.len() {
            return Err(Error::DimensionMismatch {
                expected: self.assets.len(),
                found: permutation.len(),
            });
        }
        self.permutation = permutation;
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// `permutation()[i]` is the pre-sort row index of row `i`.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn num_assets(&self) -> usize {
        self.assets.len()
    }

    /// T_tot, the number of return days.
    pub fn num_days(&self) -> usize {
        self.dates.len()
    }

    pub fn ticker(&self, row: usize) -> &str {
        &self.assets[row].ticker
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let values = self.values.select_rows(rows);
        Self {
            values,
            assets: rows.iter().map(|&r| self.assets[r].clone()).collect(),
            dates: self.dates.clone(),
            permutation: rows.iter().map(|&r| self.permutation[r]).collect(),
        }
    }
}

/// Computes G_i(t) = ln(S_i(t+1) / S_i(t)) for a one-day step.
pub fn log_returns(prices: &PriceTable) -> ReturnMatrix {
    let s = &prices.prices;
    let days = s.ncols() - 1;
    let values = DMatrix::from_fn(s.nrows(), days, |i, t| math::ln(s[(i, t + 1)] / s[(i, t)]));
    ReturnMatrix {
        values,
        assets: prices
            .tickers
            .iter()
            .map(|t| Asset {
                ticker: t.clone(),
                sector: None,
                subsector: None,
            })
            .collect(),
        dates: prices.dates[1..].to_vec(),
        permutation: (0..prices.tickers.len()).collect(),
    }
}

/// Sector (and optional sub-sector) label for one ticker, as read from a
/// sector file. The code is validated by [`sector_sort`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorAssignment {
    pub code: String,
    pub subsector: Option<String>,
}

pub type SectorMap = BTreeMap<String, SectorAssignment>;

/// Reorders rows into the fixed sector order, alphabetical by sub-sector
/// within a sector. The sort is stable, so ties keep their input order and an
/// already sorted matrix comes back unchanged.
pub fn sector_sort(returns: &ReturnMatrix, sectors: &SectorMap) -> Result<ReturnMatrix> {
    let mut keyed = Vec::with_capacity(returns.assets.len());
    for (row, asset) in returns.assets.iter().enumerate() {
        let assignment = sectors
            .get(&asset.ticker)
            .ok_or_else(|| Error::MissingSector {
                ticker: asset.ticker.clone(),
            })?;
        let sector = Sector::parse(&assignment.code).ok_or_else(|| Error::UnknownSector {
            ticker: asset.ticker.clone(),
            code: assignment.code.clone(),
        })?;
        keyed.push((sector, assignment.subsector.clone(), row));
    }
    keyed.sort_by(|a, b| (a.0, a.1.as_deref().unwrap_or("")).cmp(&(b.0, b.1.as_deref().unwrap_or(""))));

    let rows: Vec<usize> = keyed.iter().map(|k| k.2).collect();
    let mut sorted = returns.select_rows(&rows);
    for (asset, (sector, subsector, _)) in sorted.assets.iter_mut().zip(keyed) {
        asset.sector = Some(sector);
        asset.subsector = subsector;
    }
    Ok(sorted)
}
