//! Synthetic return panels with planted correlation regimes.
//!
//! Tickers are grouped into sectors. In every epoch the returns are a market
//! factor of epoch-dependent strength, plus a factor shared by a pair of
//! sectors (which pairs go together is decided by the epoch's regime), plus
//! idiosyncratic noise. Clustering the matrices should recover the regime
//! sequence once the market factor is removed.

use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use marketstates_core::ingest::{Asset, SectorAssignment, SectorMap};
use marketstates_core::{DMatrix, PriceTable, ReturnMatrix, Sector};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::io::{self, fmt_f64};

/// Parameters of a factor panel.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    /// Number of sectors (at most 11).
    pub sectors: usize,
    pub per_sector: usize,
    pub epoch_length: usize,
    /// Regime index per epoch.
    pub regimes: Vec<usize>,
    /// Market-factor loading per epoch.
    pub market: Vec<f64>,
    /// Loading on the shared sector-pair factor.
    pub pair_strength: f64,
    /// Loading on a factor private to each sector, the same in every regime.
    pub sector_strength: f64,
    /// Scale of the idiosyncratic noise.
    pub noise: f64,
    pub seed: u64,
}

/// A generated panel together with the planted truth.
#[derive(Debug, Clone)]
pub struct PlantedPanel {
    pub returns: ReturnMatrix,
    pub sectors: SectorMap,
    pub regimes: Vec<usize>,
    pub epoch_length: usize,
}

/// Index of the pair factor that sector `sector` loads on in regime `regime`.
///
/// Regime 0 pairs sectors {0,1},{2,3}; regime 1 pairs {0,2},{1,3}; regime 2
/// pairs {0,3},{1,2}. Sectors beyond the fourth repeat the pattern in blocks
/// of four.
pub fn pair_factor(regime: usize, sector: usize) -> usize {
    const PAIRS: [[usize; 4]; 3] = [[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0]];
    (sector / 4) * 2 + PAIRS[regime % 3][sector % 4]
}

/// Regime labels for `epochs` epochs cycling through `regimes` in blocks of
/// `block` consecutive epochs.
pub fn block_regimes(epochs: usize, regimes: usize, block: usize) -> Vec<usize> {
    (0..epochs).map(|n| (n / block.max(1)) % regimes.max(1)).collect()
}

/// Per-epoch market loadings drawn uniformly from `[low, high]`.
pub fn random_levels(epochs: usize, low: f64, high: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..epochs).map(|_| rng.random_range(low..=high)).collect()
}

/// Consecutive weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn sector_of(s: usize) -> Sector {
    Sector::ALL[s % Sector::ALL.len()]
}

fn tickers(sectors: usize, per_sector: usize) -> Vec<(String, Sector)> {
    (0..sectors)
        .flat_map(|s| (0..per_sector).map(move |j| (format!("{}{:02}", sector_of(s).code(), j + 1), sector_of(s))))
        .collect()
}

fn panel_from_values(values: DMatrix<f64>, sectors: usize, per_sector: usize, start: NaiveDate) -> (ReturnMatrix, SectorMap) {
    let names = tickers(sectors, per_sector);
    let assets = names
        .iter()
        .map(|(t, s)| Asset {
            ticker: t.clone(),
            sector: Some(*s),
            subsector: None,
        })
        .collect();
    let map = names
        .iter()
        .map(|(t, s)| {
            (
                t.clone(),
                SectorAssignment {
                    code: s.code().to_string(),
                    subsector: None,
                },
            )
        })
        .collect();
    let dates = business_days(start, values.ncols() + 1)[1..].to_vec();
    let returns = ReturnMatrix::new(values, assets, dates).expect("generated panel is consistent");
    (returns, map)
}

impl FactorPanel {
    /// Three regimes in blocks of five epochs over 30 epochs of 42 days, 40
    /// tickers in four sectors, with market loadings drawn from [0.5, 3].
    /// The market factor dominates the standard correlation matrices while
    /// the regime only moves the sector-pair structure.
    pub fn three_regimes(seed: u64) -> Self {
        let epochs = 30;
        Self {
            sectors: 4,
            per_sector: 10,
            epoch_length: 42,
            regimes: block_regimes(epochs, 3, 5),
            market: random_levels(epochs, 0.5, 3.0, 1000 + seed),
            pair_strength: 0.7,
            sector_strength: 0.3,
            noise: 1.0,
            seed,
        }
    }

    pub fn num_assets(&self) -> usize {
        self.sectors * self.per_sector
    }

    pub fn generate(&self) -> PlantedPanel {
        assert_eq!(self.regimes.len(), self.market.len(), "one market level per epoch");
        let k = self.num_assets();
        let t_len = self.epoch_length;
        let days = self.regimes.len() * t_len;
        let pair_factors = self.sectors.div_ceil(4) * 2;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut values = DMatrix::zeros(k, days);
        let mut draw = || -> f64 { rng.sample(StandardNormal) };
        for (n, (&regime, &level)) in self.regimes.iter().zip(&self.market).enumerate() {
            for t in n * t_len..(n + 1) * t_len {
                let market = draw();
                let pairs: Vec<f64> = (0..pair_factors).map(|_| draw()).collect();
                let own: Vec<f64> = (0..self.sectors).map(|_| draw()).collect();
                for i in 0..k {
                    let s = i / self.per_sector;
                    values[(i, t)] = 0.01
                        * (level * market
                            + self.pair_strength * pairs[pair_factor(regime, s)]
                            + self.sector_strength * own[s]
                            + self.noise * draw());
                }
            }
        }
        let start = NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date");
        let (returns, sectors) = panel_from_values(values, self.sectors, self.per_sector, start);
        PlantedPanel {
            returns,
            sectors,
            regimes: self.regimes.clone(),
            epoch_length: t_len,
        }
    }
}

/// Equicorrelation matrix with an extra within-sector correlation:
/// `rho` off the diagonal everywhere and `rho + within` inside each block.
pub fn block_correlation(sectors: usize, per_sector: usize, rho: f64, within: f64) -> DMatrix<f64> {
    let k = sectors * per_sector;
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else if i / per_sector == j / per_sector {
            rho + within
        } else {
            rho
        }
    })
}

/// A K×T matrix whose rows have zero mean and whose Pearson correlation
/// matrix equals `target` up to rounding.
///
/// Requires T > K; `target` must be positive definite.
pub fn exact_correlation_block(target: &DMatrix<f64>, length: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let k = target.nrows();
    assert!(length > k, "an exact K×K correlation needs more than K days");
    // Orthonormal K columns of length T, all orthogonal to the ones vector.
    let mut z = DMatrix::<f64>::from_fn(length, k + 1, |_, _| rng.sample(StandardNormal));
    z.set_column(0, &DVector::from_element(length, 1.0));
    let q = z.qr().q();
    let q = q.columns(1, k).into_owned();
    let w = target.clone().cholesky().expect("target must be positive definite").l();
    (w * q.transpose()) * (length as f64).sqrt()
}

/// Panel whose epochs have exactly prescribed correlation matrices.
pub fn exact_panel(targets: &[DMatrix<f64>], sectors: usize, per_sector: usize, length: usize, seed: u64) -> ReturnMatrix {
    let k = sectors * per_sector;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = DMatrix::zeros(k, targets.len() * length);
    for (n, target) in targets.iter().enumerate() {
        let block = exact_correlation_block(target, length, &mut rng) * 0.01;
        values.columns_mut(n * length, length).copy_from(&block);
    }
    let start = NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date");
    panel_from_values(values, sectors, per_sector, start).0
}

/// Prices starting at `start_price` whose log returns are `returns`.
pub fn prices_from_returns(returns: &ReturnMatrix, first_date: NaiveDate, start_price: f64) -> PriceTable {
    let g = returns.values();
    let mut prices = DMatrix::zeros(g.nrows(), g.ncols() + 1);
    for i in 0..g.nrows() {
        let mut log_price = start_price.ln();
        prices[(i, 0)] = start_price;
        for t in 0..g.ncols() {
            log_price += g[(i, t)];
            prices[(i, t + 1)] = log_price.exp();
        }
    }
    let mut dates = vec![first_date];
    dates.extend_from_slice(returns.dates());
    let tickers = returns.assets().iter().map(|a| a.ticker.clone()).collect();
    PriceTable::new(tickers, dates, prices).expect("generated prices are valid")
}

/// Writes a panel as pipeline inputs: `prices.csv` in long format (tickers
/// listed in reverse order, so ingest has to sort them) and `sectors.csv`.
pub fn write_inputs(dir: &Path, panel: &PlantedPanel) -> Result<()> {
    let first = business_days(NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"), 1)[0];
    let prices = prices_from_returns(&panel.returns, first, 100.0);
    let prices = &prices;
    let rows = (0..prices.num_tickers()).rev().flat_map(|i| {
        let ticker = &prices.tickers()[i];
        prices
            .dates()
            .iter()
            .enumerate()
            .map(move |(t, d)| [ticker.clone(), d.to_string(), fmt_f64(prices.prices()[(i, t)])])
    });
    io::write_rows(&dir.join("prices.csv"), &["ticker", "date", "close"], rows)?;
    io::write_rows(
        &dir.join("sectors.csv"),
        &["ticker", "sector", "subsector"],
        panel
            .sectors
            .iter()
            .map(|(t, a)| [t.clone(), a.code.clone(), a.subsector.clone().unwrap_or_default()]),
    )
}
