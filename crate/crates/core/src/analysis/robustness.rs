use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ari::adjusted_rand_index;
use crate::clustering::{cluster_set, MatrixSet, Representation};
use crate::correlation::MatrixKind;
use crate::error::{Error, Result};
use crate::ingest::ReturnMatrix;
use crate::math;
use crate::matrices::epoch_matrices;

/// How subset solutions are produced; should match the reference run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobustnessOptions {
    pub epoch_length: usize,
    pub kind: MatrixKind,
    /// Cluster count of the reference solution.
    pub k: usize,
    pub restarts: usize,
    /// Clustering seed of the reference run; subset draws derive from it.
    pub seed: u64,
    pub representation: Representation,
    /// Redraws allowed when a subset has a zero-volatility row.
    pub max_attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessTrial {
    pub subset_size: usize,
    /// 0-based repetition.
    pub repetition: usize,
    /// Seed of this (size, repetition) job.
    pub seed: u64,
    /// Draws used (1 when the first subset was usable).
    pub attempts: usize,
    /// Rows of the full return matrix in the subset, ascending.
    pub rows: Vec<usize>,
    pub ari: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AriSummary {
    pub subset_size: usize,
    pub trials: Vec<RobustnessTrial>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl AriSummary {
    pub fn from_trials(subset_size: usize, trials: Vec<RobustnessTrial>) -> Self {
        let n = trials.len() as f64;
        let values = || trials.iter().map(|t| t.ari);
        let mean = values().sum::<f64>() / n;
        let var = values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            subset_size,
            mean,
            min: values().fold(f64::INFINITY, f64::min),
            max: values().fold(f64::NEG_INFINITY, f64::max),
            std: math::sqrt(var),
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AriReport {
    pub summaries: Vec<AriSummary>,
}

/// Seed of the job (subset size, repetition).
fn trial_seed(seed: u64, subset_size: usize, repetition: usize) -> u64 {
    math::mix_seed(math::mix_seed(seed, subset_size as u64), repetition as u64)
}

/// One subset draw: pick `subset_size` tickers, rebuild the epoch matrices,
/// recluster with the reference settings and compare to `reference`.
///
/// A subset containing a ticker with zero volatility (or one fully explained
/// by the market mode) in some epoch is redrawn.
pub fn robustness_trial(
    returns: &ReturnMatrix,
    reference: &[usize],
    options: &RobustnessOptions,
    subset_size: usize,
    repetition: usize,
) -> Result<RobustnessTrial> {
    let universe = returns.num_assets();
    if subset_size > universe {
        return Err(Error::SubsetTooLarge {
            size: subset_size,
            universe,
        });
    }
    if subset_size < 2 {
        return Err(Error::TooFewItems {
            required: 2,
            found: subset_size,
        });
    }
    let seed = trial_seed(options.seed, subset_size, repetition);
    for attempt in 0..options.max_attempts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(math::mix_seed(seed, attempt as u64));
        let mut rows = index::sample(&mut rng, universe, subset_size).into_vec();
        rows.sort_unstable();
        let subset = returns.select_rows(&rows);
        let matrices = match epoch_matrices(&subset, options.epoch_length, options.kind) {
            Ok(m) => m,
            Err(e @ (Error::ZeroVolatility { .. } | Error::ZeroReducedVariance { .. })) => {
                log::warn!("subset size {subset_size}, repetition {repetition}: {e}; drawing again");
                continue;
            }
            Err(e) => return Err(e),
        };
        if matrices.len() != reference.len() {
            return Err(Error::PartitionMismatch {
                left: matrices.len(),
                right: reference.len(),
            });
        }
        let set = MatrixSet::new(matrices.matrices)?;
        let hierarchy = cluster_set(&set, options.k, options.restarts, options.seed, options.representation)?;
        let solution = hierarchy.solution(options.k).unwrap_or_else(|| hierarchy.last());
        let ari = adjusted_rand_index(&solution.labels, reference)?;
        return Ok(RobustnessTrial {
            subset_size,
            repetition,
            seed,
            attempts: attempt + 1,
            rows,
            ari: ari.value,
            degenerate: ari.degenerate,
        });
    }
    Err(Error::SubsetExhausted {
        size: subset_size,
        attempts: options.max_attempts.max(1),
    })
}

/// All repetitions for all subset sizes, run in order.
pub fn subset_robustness(
    returns: &ReturnMatrix,
    reference: &[usize],
    options: &RobustnessOptions,
    subset_sizes: &[usize],
    repetitions: usize,
) -> Result<AriReport> {
    let summaries = subset_sizes
        .iter()
        .map(|&size| {
            let trials = (0..repetitions)
                .map(|rep| robustness_trial(returns, reference, options, size, rep))
                .collect::<Result<Vec<_>>>()?;
            Ok(AriSummary::from_trials(size, trials))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AriReport { summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Asset;
    use chrono::NaiveDate;
    use nalgebra::DMatrix;

    fn returns(k: usize, days: usize) -> ReturnMatrix {
        let d0 = NaiveDate::from_ymd_opt(2003, 1, 1).unwrap();
        let dates = (0..days as u64).map(|d| d0 + chrono::Days::new(d)).collect();
        let assets = (0..k)
            .map(|i| Asset {
                ticker: alloc::format!("A{i}"),
                sector: None,
                subsector: None,
            })
            .collect();
        let values = DMatrix::from_fn(k, days, |i, t| {
            let x = libm::sin(i as f64 * 12.9898 + t as f64 * 78.233) * 43_758.545_3;
            let common = libm::sin(t as f64 * 0.7) * if t < days / 2 { 0.5 } else { 2.0 };
            (x - libm::floor(x) - 0.5) + common
        });
        ReturnMatrix::new(values, assets, dates).unwrap()
    }

    fn options() -> RobustnessOptions {
        RobustnessOptions {
            epoch_length: 5,
            kind: MatrixKind::Standard,
            k: 2,
            restarts: 5,
            seed: 17,
            representation: Representation::Pca,
            max_attempts: 10,
        }
    }

    #[test]
    fn full_universe_reproduces_reference() {
        let r = returns(8, 40);
        let o = options();
        let m = epoch_matrices(&r, 5, o.kind).unwrap();
        let set = MatrixSet::new(m.matrices).unwrap();
        let reference = cluster_set(&set, 2, 5, 17, o.representation).unwrap().last().labels.clone();
        let report = subset_robustness(&r, &reference, &o, &[8], 3).unwrap();
        let s = &report.summaries[0];
        assert!(s.trials.iter().all(|t| t.ari == 1.0));
        assert_eq!((s.mean, s.min, s.max, s.std), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn reproducible_and_bounded() {
        let r = returns(10, 40);
        let reference = alloc::vec![0, 0, 0, 0, 1, 1, 1, 1];
        let o = options();
        let a = subset_robustness(&r, &reference, &o, &[5, 7], 2).unwrap();
        let b = subset_robustness(&r, &reference, &o, &[5, 7], 2).unwrap();
        assert_eq!(a, b);
        assert!(a.summaries.iter().flat_map(|s| &s.trials).all(|t| t.ari <= 1.0));
        assert!(robustness_trial(&r, &reference, &o, 11, 0).is_err());
    }
}
