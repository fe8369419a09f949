//! Behaviour of the full analysis chain on planted panels.

use marketstates::synthetic::{block_correlation, block_regimes, exact_panel, FactorPanel, PlantedPanel};
use marketstates_core::analysis::{
    adjusted_rand_index, build_timeline, subset_robustness, turning_points, RobustnessOptions,
};
use marketstates_core::clustering::{cluster_set, MatrixSet, Representation};
use marketstates_core::matrices::{epoch_matrices, sliding_mean_correlation};
use marketstates_core::{DMatrix, MatrixKind, ReturnMatrix};

fn labels(returns: &ReturnMatrix, length: usize, kind: MatrixKind, k: usize, seed: u64) -> Vec<usize> {
    let m = epoch_matrices(returns, length, kind).unwrap();
    let set = MatrixSet::new(m.matrices).unwrap();
    let h = cluster_set(&set, k, 20, seed, Representation::Pca).unwrap();
    h.solution(k).unwrap_or_else(|| h.last()).labels.clone()
}

fn turning_point_count(returns: &ReturnMatrix, length: usize, kind: MatrixKind, k: usize) -> usize {
    let m = epoch_matrices(returns, length, kind).unwrap();
    let infos = m.infos.clone();
    let set = MatrixSet::new(m.matrices).unwrap();
    let h = cluster_set(&set, k, 20, 3, Representation::Pca).unwrap();
    let timeline = build_timeline(&h.solution(k).unwrap_or_else(|| h.last()).labels, &infos).unwrap();
    turning_points(&timeline).len()
}

/// Two regimes of 15 epochs each with the given market levels.
fn two_regimes(market: Vec<f64>, seed: u64) -> PlantedPanel {
    FactorPanel {
        regimes: block_regimes(30, 2, 15),
        market,
        ..FactorPanel::three_regimes(seed)
    }
    .generate()
}

#[test]
fn single_structure_change_gives_one_turning_point() {
    let panel = two_regimes(vec![1.0; 30], 4);
    let count = turning_point_count(&panel.returns, panel.epoch_length, MatrixKind::ReducedCorr, 2);
    assert_eq!(count, 1);
}

#[test]
fn demeaning_removes_pure_mean_shifts() {
    let (sectors, per, length) = (4, 5, 42);
    let regimes: Vec<usize> = (0..16).map(|n| (n / 4) % 2).collect();
    let targets: Vec<DMatrix<f64>> = regimes
        .iter()
        .map(|&r| block_correlation(sectors, per, [0.15, 0.55][r], 0.25))
        .collect();
    let returns = exact_panel(&targets, sectors, per, length, 21);

    let demeaned = labels(&returns, length, MatrixKind::Demeaned, 2, 1);
    assert!(demeaned.iter().all(|&l| l == demeaned[0]), "{demeaned:?}");

    let standard = labels(&returns, length, MatrixKind::Standard, 2, 1);
    let ari = adjusted_rand_index(&standard, &regimes).unwrap();
    assert!((ari.value - 1.0).abs() < 1e-12, "standard ARI {}", ari.value);
}

#[test]
fn market_swings_add_turning_points_only_to_standard_matrices() {
    let market: Vec<f64> = (0..30).map(|n| if (n / 3) % 2 == 0 { 0.5 } else { 3.0 }).collect();
    let panel = two_regimes(market, 8);
    let standard = turning_point_count(&panel.returns, panel.epoch_length, MatrixKind::Standard, 2);
    let reduced = turning_point_count(&panel.returns, panel.epoch_length, MatrixKind::ReducedCorr, 2);
    assert_eq!(reduced, 1);
    assert!(standard > reduced, "standard {standard}, reduced {reduced}");
}

#[test]
fn subset_agreement_grows_with_subset_size() {
    let panel = FactorPanel::three_regimes(2).generate();
    let kind = MatrixKind::ReducedCorr;
    let reference = labels(&panel.returns, panel.epoch_length, kind, 3, 17);
    let options = RobustnessOptions {
        epoch_length: panel.epoch_length,
        kind,
        k: 3,
        restarts: 10,
        seed: 17,
        representation: Representation::Pca,
        max_attempts: 5,
    };
    let sizes = [4, 8, 16, 32];
    let report = subset_robustness(&panel.returns, &reference, &options, &sizes, 20).unwrap();
    let means: Vec<f64> = report.summaries.iter().map(|s| s.mean).collect();
    let inversions = means.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(inversions <= 1, "means {means:?}");
    assert!(means[3] > means[0], "means {means:?}");
}

#[test]
fn market_level_step_shows_in_the_sliding_series() {
    let market: Vec<f64> = (0..10).map(|n| if n < 5 { 0.3 } else { 2.5 }).collect();
    let panel = FactorPanel {
        regimes: vec![0; 10],
        market,
        ..FactorPanel::three_regimes(5)
    }
    .generate();
    let length = panel.epoch_length;
    let series = sliding_mean_correlation(&panel.returns, length, MatrixKind::Standard).unwrap();
    let step = 5 * length;
    let before: Vec<f64> = series[..step - length].iter().map(|p| p.mean_correlation).collect();
    let after: Vec<f64> = series[step..].iter().map(|p| p.mean_correlation).collect();
    let max_before = before.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_after = after.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min_after > max_before, "before up to {max_before}, after from {min_after}");

    let reduced = sliding_mean_correlation(&panel.returns, length, MatrixKind::ReducedCorr).unwrap();
    let spread = |v: &[f64]| {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let reduced_values: Vec<f64> = reduced.iter().map(|p| p.mean_correlation).collect();
    let standard_values: Vec<f64> = series.iter().map(|p| p.mean_correlation).collect();
    assert!(spread(&reduced_values) < spread(&standard_values));
}
