use alloc::vec::Vec;

use super::bisecting::BisectingResult;

/// Child quotients for one cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct KSelectionEntry {
    pub k: usize,
    /// ξ = d_CtoC / width per cluster label; `None` for omitted clusters
    /// (singletons, zero width, or the unsplit root).
    pub quotients: Vec<Option<f64>>,
    /// Clusters left out of the mean.
    pub omitted: usize,
    /// Sum of the quotients divided by the number of contributing clusters.
    pub mean_contributing: Option<f64>,
    /// Sum of the quotients divided by k.
    pub mean_over_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelectionCurve {
    pub entries: Vec<KSelectionEntry>,
}

impl KSelectionCurve {
    pub fn entry(&self, k: usize) -> Option<&KSelectionEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    /// k with the largest mean quotient (contributing-children divisor);
    /// the smaller k wins ties.
    pub fn best_k(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for e in &self.entries {
            if let Some(m) = e.mean_contributing {
                if best.map_or(true, |(_, b)| m > b) {
                    best = Some((e.k, m));
                }
            }
        }
        best.map(|(k, _)| k)
    }
}

/// For every k of the hierarchy, each cluster contributes the distance
/// between its own centroid and its sibling's, divided by its width.
pub fn k_selection(hierarchy: &BisectingResult) -> KSelectionCurve {
    let entries = hierarchy
        .solutions
        .iter()
        .map(|solution| {
            let quotients: Vec<Option<f64>> = solution
                .leaves
                .iter()
                .map(|&id| {
                    let node = &hierarchy.nodes[id];
                    let split = hierarchy.split_of(id)?;
                    if node.size() < 2 || node.zero_width {
                        return None;
                    }
                    Some(split.centroid_distance / node.width)
                })
                .collect();
            let values: Vec<f64> = quotients.iter().flatten().copied().collect();
            let sum: f64 = values.iter().sum();
            let defined = !values.is_empty();
            KSelectionEntry {
                k: solution.k,
                omitted: quotients.len() - values.len(),
                mean_contributing: defined.then(|| sum / values.len() as f64),
                mean_over_k: defined.then(|| sum / solution.k as f64),
                quotients,
            }
        })
        .collect();
    KSelectionCurve { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{bisecting_kmeans, PointSet};
    use alloc::vec;

    #[test]
    fn two_tight_clouds() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.2],
            vec![10.0, 0.0],
            vec![10.0, 0.2],
            vec![10.0, 0.4],
        ];
        let p = PointSet::from_rows(&rows).unwrap();
        let r = bisecting_kmeans(&p, 3, 5, 2).unwrap();
        let curve = k_selection(&r);
        assert!(curve.entry(1).unwrap().mean_contributing.is_none());
        let e2 = curve.entry(2).unwrap();
        assert_eq!(e2.omitted, 0);
        let d = r.splits[0].centroid_distance;
        let w: Vec<f64> = r.solution(2).unwrap().widths.clone();
        let expected = (d / w[0] + d / w[1]) / 2.0;
        assert!((e2.mean_contributing.unwrap() - expected).abs() < 1e-12);
        assert!(e2.mean_contributing.unwrap() > 50.0);
        assert_eq!(curve.best_k(), Some(2));
        // k = 3 splits one cloud, leaving at least one singleton out.
        assert!(curve.entry(3).unwrap().omitted >= 1);
    }

    #[test]
    fn duplicate_child_is_omitted() {
        let rows = vec![vec![0.0], vec![0.0], vec![5.0], vec![6.0]];
        let p = PointSet::from_rows(&rows).unwrap();
        let r = bisecting_kmeans(&p, 2, 5, 0).unwrap();
        let e = k_selection(&r).entries[1].clone();
        assert_eq!(e.omitted, 1);
        assert_eq!(e.mean_over_k.unwrap() * 2.0, e.mean_contributing.unwrap());
    }
}
