use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::points::PointSet;
use crate::error::{Error, Result};
use crate::math;

/// Relative slack allowed when checking that J never increases.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Safety cap on Lloyd iterations per restart.
    pub max_iterations: usize,
}

impl KMeansOptions {
    pub fn new(k: usize, restarts: usize, seed: u64) -> Self {
        Self {
            k,
            restarts,
            seed,
            max_iterations: 1000,
        }
    }
}

/// The course of one Lloyd run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub restart: usize,
    /// Positions (within the clustered members) of the start centroids.
    pub start: Vec<usize>,
    /// J after each assignment/update step.
    pub objective: Vec<f64>,
    /// Assignments stopped changing before the iteration cap.
    pub converged: bool,
    /// Empty clusters repaired by moving the farthest member.
    pub reseeds: usize,
}

impl RestartTrace {
    /// Number of steps where J went up by more than rounding.
    pub fn monotonicity_violations(&self) -> usize {
        self.objective
            .windows(2)
            .filter(|w| w[1] > w[0] + MONOTONE_SLACK * w[0].abs().max(f64::MIN_POSITIVE))
            .count()
    }
}

/// Best Lloyd solution over all restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansSolution {
    /// 0-based label of each clustered member, in member order.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    /// J = Σ_l Σ_{i in l} ‖x_i − c_l‖².
    pub objective: f64,
    pub best_restart: usize,
    pub traces: Vec<RestartTrace>,
}

/// Lloyd k-means over every point of the set.
pub fn kmeans(points: &PointSet, options: &KMeansOptions) -> Result<KMeansSolution> {
    let members: Vec<usize> = (0..points.len()).collect();
    kmeans_members(points, &members, options)
}

/// Lloyd k-means over the listed points only; labels follow `members`.
///
/// Restart r draws k distinct start members from ChaCha8 seeded with
/// `seed` on stream r. The solution with the smallest J wins, ties going to
/// the earlier restart.
pub fn kmeans_members(points: &PointSet, members: &[usize], options: &KMeansOptions) -> Result<KMeansSolution> {
    let n = members.len();
    if options.k == 0 || options.k > n {
        return Err(Error::InvalidClusterCount { k: options.k, items: n });
    }
    if options.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required"));
    }
    let mut best: Option<Run> = None;
    let mut traces = Vec::with_capacity(options.restarts);
    for restart in 0..options.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(restart as u64);
        let start = index::sample(&mut rng, n, options.k).into_vec();
        let run = lloyd(points, members, &start, options.max_iterations);
        traces.push(RestartTrace {
            restart,
            start,
            objective: run.trace.clone(),
            converged: run.converged,
            reseeds: run.reseeds,
        });
        if best.as_ref().map_or(true, |b| run.objective < b.objective) {
            best = Some(Run { restart, ..run });
        }
    }
    let best = best.expect("at least one restart ran");
    let mut sizes = alloc::vec![0; options.k];
    for &l in &best.labels {
        sizes[l] += 1;
    }
    Ok(KMeansSolution {
        labels: best.labels,
        centroids: best.centroids,
        sizes,
        objective: best.objective,
        best_restart: best.restart,
        traces,
    })
}

struct Run {
    restart: usize,
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    objective: f64,
    trace: Vec<f64>,
    converged: bool,
    reseeds: usize,
}

fn lloyd(points: &PointSet, members: &[usize], start: &[usize], max_iterations: usize) -> Run {
    let n = members.len();
    let k = start.len();
    let mut centroids: Vec<Vec<f64>> = start.iter().map(|&s| points.point(members[s]).to_vec()).collect();
    let mut labels = alloc::vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut reseeds = 0;
    for _ in 0..max_iterations {
        let mut changed = assign(points, members, &centroids, &mut labels);
        let repaired = repair_empty(points, members, &centroids, &mut labels, k);
        reseeds += repaired;
        changed |= repaired > 0;
        if !changed {
            converged = true;
            break;
        }
        centroids = update(points, members, &labels, k);
        trace.push(objective(points, members, &labels, &centroids));
    }
    let objective = objective(points, members, &labels, &centroids);
    Run {
        restart: 0,
        labels,
        centroids,
        objective,
        trace,
        converged,
        reseeds,
    }
}

/// Nearest centroid for each member, lowest label on ties.
fn assign(points: &PointSet, members: &[usize], centroids: &[Vec<f64>], labels: &mut [usize]) -> bool {
    let mut changed = false;
    for (pos, &m) in members.iter().enumerate() {
        let p = points.point(m);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, c) in centroids.iter().enumerate() {
            let d = math::squared_distance(p, c);
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        if labels[pos] != best {
            labels[pos] = best;
            changed = true;
        }
    }
    changed
}

/// Gives every empty cluster the member farthest from its current centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(points: &PointSet, members: &[usize], centroids: &[Vec<f64>], labels: &mut [usize], k: usize) -> usize {
    let mut repaired = 0;
    loop {
        let mut sizes = alloc::vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return repaired;
        };
        let mut donor = None;
        let mut donor_d = -1.0;
        for (pos, &m) in members.iter().enumerate() {
            let l = labels[pos];
            if sizes[l] < 2 {
                continue;
            }
            let d = math::squared_distance(points.point(m), &centroids[l]);
            if d > donor_d {
                donor_d = d;
                donor = Some(pos);
            }
        }
        // k <= n guarantees a cluster with two or more members exists.
        let pos = donor.expect("a cluster with at least two members");
        labels[pos] = empty;
        repaired += 1;
    }
}

fn update(points: &PointSet, members: &[usize], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); k];
    for (pos, &m) in members.iter().enumerate() {
        groups[labels[pos]].push(m);
    }
    groups.iter().map(|g| points.mean_of(g)).collect()
}

fn objective(points: &PointSet, members: &[usize], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    members
        .iter()
        .zip(labels)
        .map(|(&m, &l)| math::squared_distance(points.point(m), &centroids[l]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn points(rows: &[[f64; 2]]) -> PointSet {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        PointSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn separated_pairs_are_recovered_with_minimal_objective() {
        let p = points(&[[0.0, 0.0], [0.2, 0.0], [10.0, 10.0], [10.0, 10.4]]);
        let s = kmeans(&p, &KMeansOptions::new(2, 10, 3)).unwrap();
        assert_eq!(s.labels[0], s.labels[1]);
        assert_eq!(s.labels[2], s.labels[3]);
        assert_ne!(s.labels[0], s.labels[2]);
        // Within-pair spread: 2·0.1² + 2·0.2².
        assert!((s.objective - 0.1).abs() < 1e-12);
        // Exhaustive check over all 2-partitions.
        let mut best = f64::INFINITY;
        for mask in 1u32..15 {
            let a: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            let b: Vec<usize> = (0..4).filter(|i| mask & (1 << i) == 0).collect();
            let j = |g: &[usize]| {
                let c = p.mean_of(g);
                g.iter().map(|&i| math::squared_distance(p.point(i), &c)).sum::<f64>()
            };
            best = best.min(j(&a) + j(&b));
        }
        assert!((s.objective - best).abs() < 1e-12);
    }

    #[test]
    fn k_equal_to_n_gives_singletons() {
        let p = points(&[[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]]);
        let s = kmeans(&p, &KMeansOptions::new(3, 4, 1)).unwrap();
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.sizes, vec![1, 1, 1]);
    }

    #[test]
    fn duplicates_force_a_repair() {
        let p = points(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [3.0, 0.0]]);
        let s = kmeans(&p, &KMeansOptions::new(3, 8, 5)).unwrap();
        assert!(s.sizes.iter().all(|&m| m > 0));
        assert!(s.traces.iter().all(|t| t.monotonicity_violations() == 0));
    }

    #[test]
    fn rejects_bad_counts() {
        let p = points(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(matches!(
            kmeans(&p, &KMeansOptions::new(3, 1, 0)),
            Err(Error::InvalidClusterCount { k: 3, items: 2 })
        ));
        assert!(kmeans(&p, &KMeansOptions::new(1, 0, 0)).is_err());
    }

    #[test]
    fn same_seed_same_result() {
        let p = points(&[[0.0, 0.3], [1.0, 0.1], [0.5, 2.0], [3.0, 3.0], [2.5, 0.2], [1.1, 1.9]]);
        let o = KMeansOptions::new(3, 5, 42);
        assert_eq!(kmeans(&p, &o).unwrap(), kmeans(&p, &o).unwrap());
    }
}
