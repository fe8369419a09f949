use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::timeline::{build_timeline, turning_points, StateTimeline, TurningPointReport};
use crate::clustering::{cluster_set, BisectingResult, MatrixSet, Representation, StopReason};
use crate::correlation::{demean_matrix, mean_correlation, MatrixKind};
use crate::epoch::EpochInfo;
use crate::error::{Error, Result};

/// The element-wise average of the matrices in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalState {
    /// 1-based state, numbered as in the timeline.
    pub state: usize,
    pub matrix: DMatrix<f64>,
    /// 1-based epochs in this state.
    pub epochs: Vec<usize>,
    pub mean_correlation: f64,
}

impl TypicalState {
    pub fn members(&self) -> usize {
        self.epochs.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalStates {
    pub states: Vec<TypicalState>,
    /// Average over all epochs.
    pub overall: DMatrix<f64>,
    pub overall_mean_correlation: f64,
}

/// Per-state averages for 1-based `states` (one per matrix of the set).
///
/// Members are summed in epoch order and then divided, the same arithmetic
/// as the cluster centroids.
pub fn typical_states(set: &MatrixSet, states: &[usize]) -> Result<TypicalStates> {
    if states.len() != set.len() {
        return Err(Error::PartitionMismatch {
            left: states.len(),
            right: set.len(),
        });
    }
    if states.contains(&0) {
        return Err(Error::InvalidArgument("states are numbered from 1"));
    }
    let count = states.iter().copied().max().unwrap_or(0);
    let all: Vec<usize> = (0..set.len()).collect();
    let overall = average(set, &all);
    let mut out = Vec::with_capacity(count);
    for state in 1..=count {
        let members: Vec<usize> = all.iter().copied().filter(|&i| states[i] == state).collect();
        if members.is_empty() {
            return Err(Error::InvalidArgument("states must be numbered without gaps"));
        }
        let matrix = average(set, &members);
        out.push(TypicalState {
            state,
            mean_correlation: mean_correlation(&matrix),
            epochs: members.iter().map(|&i| set.items()[i].epoch).collect(),
            matrix,
        });
    }
    Ok(TypicalStates {
        states: out,
        overall_mean_correlation: mean_correlation(&overall),
        overall,
    })
}

fn average(set: &MatrixSet, members: &[usize]) -> DMatrix<f64> {
    let k = set.dim();
    let mut sum = DMatrix::zeros(k, k);
    for &m in members {
        for (s, x) in sum.iter_mut().zip(set.items()[m].values.iter()) {
            *s += x;
        }
    }
    let n = members.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    sum
}

/// Timeline, typical states and turning points for one cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAnalysis {
    pub requested_k: usize,
    /// Lower than requested when bisecting ran out of splittable clusters.
    pub attained_k: usize,
    /// 0-based labels of the underlying cluster solution.
    pub labels: Vec<usize>,
    pub timeline: StateTimeline,
    pub typical: TypicalStates,
    pub turning_points: TurningPointReport,
}

impl StateAnalysis {
    pub fn is_degenerate(&self) -> bool {
        self.attained_k < self.requested_k
    }
}

/// Reads the k-cluster solution out of an existing hierarchy (or the
/// deepest one reached) and derives the state statistics.
pub fn analyze_states(
    set: &MatrixSet,
    epochs: &[EpochInfo],
    hierarchy: &BisectingResult,
    k: usize,
) -> Result<StateAnalysis> {
    let solution = hierarchy.solution(k).unwrap_or_else(|| hierarchy.last());
    if solution.k < k && hierarchy.stop == StopReason::ZeroWidth {
        log::warn!("requested {k} states but clustering is degenerate beyond k = {}", solution.k);
    }
    let timeline = build_timeline(&solution.labels, epochs)?;
    let typical = typical_states(set, &timeline.states())?;
    Ok(StateAnalysis {
        requested_k: k,
        attained_k: solution.k,
        labels: solution.labels.clone(),
        turning_points: turning_points(&timeline),
        timeline,
        typical,
    })
}

/// De-means every standard matrix, clusters the results into `k` states
/// and analyses them. Returns the de-meaned set alongside.
pub fn demeaned_state_analysis(
    set: &MatrixSet,
    epochs: &[EpochInfo],
    k: usize,
    restarts: usize,
    seed: u64,
    representation: Representation,
) -> Result<(MatrixSet, StateAnalysis)> {
    if set.kind() != MatrixKind::Standard {
        return Err(Error::KindMismatch {
            expected: MatrixKind::Standard.as_str(),
            found: set.kind().as_str(),
        });
    }
    let demeaned = MatrixSet::new(set.items().iter().map(demean_matrix).collect::<Result<_>>()?)?;
    let hierarchy = cluster_set(&demeaned, k, restarts, seed, representation)?;
    let analysis = analyze_states(&demeaned, epochs, &hierarchy, k)?;
    Ok((demeaned, analysis))
}
