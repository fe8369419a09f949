use alloc::vec::Vec;

use super::kmeans::{kmeans_members, KMeansOptions, RestartTrace};
use super::points::PointSet;
use super::is_zero_width;
use crate::error::{Error, Result};
use crate::math;

/// A cluster somewhere in the split tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Point indices, ascending.
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
    /// Mean distance of the members to the centroid.
    pub width: f64,
    /// The width is zero up to rounding (all members coincide).
    pub zero_width: bool,
    pub children: Option<[usize; 2]>,
}

impl ClusterNode {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// One parent → two children step of the hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    /// Number of clusters after this split.
    pub k: usize,
    pub parent: usize,
    pub children: [usize; 2],
    /// Distance between the two child centroids.
    pub centroid_distance: f64,
    /// Seed handed to the 2-means run.
    pub seed: u64,
    /// J of the chosen 2-means solution.
    pub objective: f64,
    /// Every Lloyd restart of the 2-means run.
    pub traces: Vec<RestartTrace>,
}

/// Partition of all points into k clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSolution {
    pub k: usize,
    /// 0-based cluster label per point.
    pub labels: Vec<usize>,
    /// Node id of each cluster in the hierarchy.
    pub leaves: Vec<usize>,
    pub sizes: Vec<usize>,
    pub widths: Vec<f64>,
    /// J = Σ_l Σ_{i in l} ‖x_i − c_l‖².
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The requested cluster count was reached.
    Reached,
    /// Every splittable cluster has zero width (duplicates or singletons).
    ZeroWidth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectingResult {
    pub requested_k: usize,
    /// Solutions for k = 1, 2, ..., attained k.
    pub solutions: Vec<ClusterSolution>,
    pub nodes: Vec<ClusterNode>,
    pub splits: Vec<SplitRecord>,
    pub stop: StopReason,
}

impl BisectingResult {
    pub fn attained_k(&self) -> usize {
        self.solutions.len()
    }

    pub fn solution(&self, k: usize) -> Option<&ClusterSolution> {
        k.checked_sub(1).and_then(|i| self.solutions.get(i))
    }

    /// The solution at the largest attained k.
    pub fn last(&self) -> &ClusterSolution {
        self.solutions.last().expect("the root solution always exists")
    }

    /// Centroids of the k-cluster solution, in label order.
    pub fn centroids(&self, k: usize) -> Option<Vec<&[f64]>> {
        self.solution(k)
            .map(|s| s.leaves.iter().map(|&n| self.nodes[n].centroid.as_slice()).collect())
    }

    /// The split that created the node, if any.
    pub fn split_of(&self, node: usize) -> Option<&SplitRecord> {
        self.nodes[node]
            .parent
            .and_then(|p| self.splits.iter().find(|s| s.parent == p))
    }
}

/// Top-down clustering: starting from one cluster, always split the leaf of
/// largest width with 2-means until `k_target` clusters exist.
///
/// After each split the first child keeps the parent's label and the second
/// gets the next free label. Ties in width go to the lower label. Split
/// number s (1-based) runs 2-means with seed `mix(seed, s)`.
pub fn bisecting_kmeans(points: &PointSet, k_target: usize, restarts: usize, seed: u64) -> Result<BisectingResult> {
    let n = points.len();
    if k_target == 0 || k_target > n {
        return Err(Error::InvalidClusterCount { k: k_target, items: n });
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required"));
    }
    let root_members: Vec<usize> = (0..n).collect();
    let mut nodes = alloc::vec![make_node(points, 0, None, root_members)];
    let mut leaves = alloc::vec![0usize];
    let mut splits = Vec::new();
    let mut solutions = alloc::vec![snapshot(points, &nodes, &leaves)];
    let mut stop = StopReason::Reached;

    while leaves.len() < k_target {
        let Some(label) = widest_leaf(&nodes, &leaves) else {
            stop = StopReason::ZeroWidth;
            break;
        };
        let parent = leaves[label];
        let split_seed = math::mix_seed(seed, (splits.len() + 1) as u64);
        let members = nodes[parent].members.clone();
        let two = kmeans_members(points, &members, &KMeansOptions::new(2, restarts, split_seed))?;
        let mut groups = [Vec::new(), Vec::new()];
        for (&m, &l) in members.iter().zip(&two.labels) {
            groups[l].push(m);
        }
        let [left, right] = groups;
        let left_id = nodes.len();
        nodes.push(make_node(points, left_id, Some(parent), left));
        let right_id = nodes.len();
        nodes.push(make_node(points, right_id, Some(parent), right));
        nodes[parent].children = Some([left_id, right_id]);
        leaves[label] = left_id;
        leaves.push(right_id);
        splits.push(SplitRecord {
            k: leaves.len(),
            parent,
            children: [left_id, right_id],
            centroid_distance: math::distance(&nodes[left_id].centroid, &nodes[right_id].centroid),
            seed: split_seed,
            objective: two.objective,
            traces: two.traces,
        });
        solutions.push(snapshot(points, &nodes, &leaves));
    }
    if stop == StopReason::ZeroWidth {
        log::info!(
            "bisecting stopped at k = {} of {k_target}: no cluster of non-zero width left",
            leaves.len()
        );
    }
    Ok(BisectingResult {
        requested_k: k_target,
        solutions,
        nodes,
        splits,
        stop,
    })
}

fn make_node(points: &PointSet, id: usize, parent: Option<usize>, members: Vec<usize>) -> ClusterNode {
    let centroid = points.mean_of(&members);
    let width = points.width(&members, &centroid);
    ClusterNode {
        id,
        parent,
        zero_width: is_zero_width(width, &centroid),
        members,
        centroid,
        width,
        children: None,
    }
}

fn widest_leaf(nodes: &[ClusterNode], leaves: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (label, &id) in leaves.iter().enumerate() {
        let node = &nodes[id];
        if node.size() < 2 || node.zero_width {
            continue;
        }
        if best.map_or(true, |(_, w)| node.width > w) {
            best = Some((label, node.width));
        }
    }
    best.map(|(label, _)| label)
}

fn snapshot(points: &PointSet, nodes: &[ClusterNode], leaves: &[usize]) -> ClusterSolution {
    let mut labels = alloc::vec![0; points.len()];
    let mut objective = 0.0;
    for (label, &id) in leaves.iter().enumerate() {
        let node = &nodes[id];
        for &m in &node.members {
            labels[m] = label;
            objective += math::squared_distance(points.point(m), &node.centroid);
        }
    }
    ClusterSolution {
        k: leaves.len(),
        labels,
        leaves: leaves.to_vec(),
        sizes: leaves.iter().map(|&id| nodes[id].size()).collect(),
        widths: leaves.iter().map(|&id| nodes[id].width).collect(),
        objective,
    }
}
