//! Lloyd k-means, the bisecting k-means hierarchy, the child-quotient
//! k-selection curve and the PCA projection used to speed clustering up.
//!
//! Clustering works on a [`PointSet`]: flattened matrices (all K² entries) or
//! PCA coordinates. Both give the same Euclidean geometry, so the same seed
//! produces the same partition on either representation.

mod bisecting;
mod kmeans;
mod pca;
mod points;
mod selection;

pub use bisecting::{bisecting_kmeans, BisectingResult, ClusterNode, ClusterSolution, SplitRecord, StopReason};
pub use kmeans::{kmeans, kmeans_members, KMeansOptions, KMeansSolution, RestartTrace};
pub use pca::{pca_project, PcaProjection};
pub use points::{distance, MatrixSet, PointSet};
pub use selection::{k_selection, KSelectionCurve, KSelectionEntry};

/// Width or distance at or below this (relative to the centroid norm, at
/// least 1) counts as zero.
pub(crate) const ZERO_WIDTH: f64 = 1e-12;

pub(crate) fn is_zero_width(width: f64, centroid: &[f64]) -> bool {
    let norm = crate::math::sqrt(centroid.iter().map(|x| x * x).sum());
    width <= ZERO_WIDTH * norm.max(1.0)
}

/// Space in which Lloyd iterations run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    /// Flattened K² vectors.
    Raw,
    /// PCA coordinates (n − 1 per epoch); same distances, much cheaper.
    #[default]
    Pca,
}

/// Bisecting k-means of a matrix set in the chosen representation.
///
/// Solutions for every k up to `k_target` are contained in the result, and
/// the split order does not depend on `k_target`.
pub fn cluster_set(
    set: &MatrixSet,
    k_target: usize,
    restarts: usize,
    seed: u64,
    representation: Representation,
) -> crate::Result<BisectingResult> {
    let points = match representation {
        Representation::Pca if set.len() >= 2 => pca_project(set)?.coordinates,
        _ => set.to_points(),
    };
    bisecting_kmeans(&points, k_target, restarts, seed)
}
