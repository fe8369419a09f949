//! Serialized results: the cluster hierarchy document, selection curve,
//! timeline, state table, turning points, ARI tables and the run summary.
//!
//! Epoch numbers, state numbers and cluster labels are 1-based in every
//! file; node ids are 0-based positions in the `nodes` list.

use std::path::Path;

use marketstates_core::analysis::{AriSummary, StateTimeline, TurningPointReport, TypicalStates};
use marketstates_core::clustering::{
    BisectingResult, ClusterNode, ClusterSolution, KSelectionCurve, RestartTrace, SplitRecord, StopReason,
};
use serde::{Deserialize, Serialize};

use crate::config::RepresentationName;
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, write_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub restart: usize,
    /// 1-based epochs used as start centroids.
    pub start: Vec<usize>,
    /// Objective J after each assignment step.
    pub objective: Vec<f64>,
    pub converged: bool,
    pub reseeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: usize,
    pub parent: Option<usize>,
    /// 1-based epochs.
    pub members: Vec<usize>,
    pub width: f64,
    pub zero_width: bool,
    pub children: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDoc {
    pub k: usize,
    pub parent: usize,
    pub children: [usize; 2],
    pub centroid_distance: f64,
    pub seed: u64,
    pub objective: f64,
    pub restarts: Vec<TraceDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub k: usize,
    /// 1-based cluster label per epoch.
    pub labels: Vec<usize>,
    /// Node id of each cluster.
    pub leaves: Vec<usize>,
    pub sizes: Vec<usize>,
    pub widths: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDoc {
    Reached,
    ZeroWidth,
}

/// The bisecting hierarchy of one matrix kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub kind: String,
    pub epochs: usize,
    pub seed: u64,
    pub restarts: usize,
    pub representation: RepresentationName,
    pub requested_k: usize,
    pub attained_k: usize,
    pub stop: StopDoc,
    /// Cluster count analysed downstream.
    pub chosen_k: usize,
    /// File (next to this one) with the matrix-space centroids of the
    /// chosen solution, in label order.
    pub centroids_file: String,
    pub nodes: Vec<NodeDoc>,
    pub splits: Vec<SplitDoc>,
    pub solutions: Vec<SolutionDoc>,
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

fn zero_based(v: &[usize]) -> Result<Vec<usize>> {
    v.iter()
        .map(|&x| x.checked_sub(1).ok_or_else(|| CliError::data("1-based index 0 in cluster report")))
        .collect()
}

impl ClusterReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: &str,
        result: &BisectingResult,
        seed: u64,
        restarts: usize,
        representation: RepresentationName,
        chosen_k: usize,
        centroids_file: &str,
    ) -> Self {
        Self {
            kind: kind.to_string(),
            epochs: result.solutions[0].labels.len(),
            seed,
            restarts,
            representation,
            requested_k: result.requested_k,
            attained_k: result.attained_k(),
            stop: match result.stop {
                StopReason::Reached => StopDoc::Reached,
                StopReason::ZeroWidth => StopDoc::ZeroWidth,
            },
            chosen_k,
            centroids_file: centroids_file.to_string(),
            nodes: result
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id,
                    parent: n.parent,
                    members: one_based(&n.members),
                    width: n.width,
                    zero_width: n.zero_width,
                    children: n.children,
                })
                .collect(),
            splits: result
                .splits
                .iter()
                .map(|s| SplitDoc {
                    k: s.k,
                    parent: s.parent,
                    children: s.children,
                    centroid_distance: s.centroid_distance,
                    seed: s.seed,
                    objective: s.objective,
                    restarts: s
                        .traces
                        .iter()
                        .map(|t| TraceDoc {
                            restart: t.restart,
                            start: one_based(&t.start),
                            objective: t.objective.clone(),
                            converged: t.converged,
                            reseeds: t.reseeds,
                        })
                        .collect(),
                })
                .collect(),
            solutions: result
                .solutions
                .iter()
                .map(|s| SolutionDoc {
                    k: s.k,
                    labels: one_based(&s.labels),
                    leaves: s.leaves.clone(),
                    sizes: s.sizes.clone(),
                    widths: s.widths.clone(),
                    objective: s.objective,
                })
                .collect(),
        }
    }

    /// The hierarchy without node centroids (they are not stored).
    pub fn to_result(&self) -> Result<BisectingResult> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                Ok(ClusterNode {
                    id: n.id,
                    parent: n.parent,
                    members: zero_based(&n.members)?,
                    centroid: Vec::new(),
                    width: n.width,
                    zero_width: n.zero_width,
                    children: n.children,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let splits = self
            .splits
            .iter()
            .map(|s| {
                Ok(SplitRecord {
                    k: s.k,
                    parent: s.parent,
                    children: s.children,
                    centroid_distance: s.centroid_distance,
                    seed: s.seed,
                    objective: s.objective,
                    traces: s
                        .restarts
                        .iter()
                        .map(|t| {
                            Ok(RestartTrace {
                                restart: t.restart,
                                start: zero_based(&t.start)?,
                                objective: t.objective.clone(),
                                converged: t.converged,
                                reseeds: t.reseeds,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let solutions = self
            .solutions
            .iter()
            .map(|s| {
                Ok(ClusterSolution {
                    k: s.k,
                    labels: zero_based(&s.labels)?,
                    leaves: s.leaves.clone(),
                    sizes: s.sizes.clone(),
                    widths: s.widths.clone(),
                    objective: s.objective,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let valid = !solutions.is_empty()
            && solutions.iter().all(|s| s.leaves.iter().all(|&l| l < nodes.len()))
            && splits.iter().all(|s| s.parent < nodes.len() && s.children.iter().all(|&c| c < nodes.len()));
        if !valid {
            return Err(CliError::data("cluster report refers to missing nodes"));
        }
        Ok(BisectingResult {
            requested_k: self.requested_k,
            solutions,
            nodes,
            splits,
            stop: match self.stop {
                StopDoc::Reached => StopReason::Reached,
                StopDoc::ZeroWidth => StopReason::ZeroWidth,
            },
        })
    }

    /// 0-based labels of the k-cluster solution, or of the deepest one.
    pub fn labels(&self, k: usize) -> Result<Vec<usize>> {
        let s = self
            .solutions
            .iter()
            .find(|s| s.k == k)
            .or(self.solutions.last())
            .ok_or_else(|| CliError::data("cluster report has no solutions"))?;
        zero_based(&s.labels)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let mut file = crate::io::create(path)?;
    std::io::Write::write_all(&mut file, text.as_bytes()).map_err(|e| CliError::io(path, e))?;
    std::io::Write::flush(&mut file).map_err(|e| CliError::io(path, e))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `k,mean_quotient,mean_quotient_over_k,omitted,quotients` with the
/// per-cluster quotients joined by `;` (empty for omitted clusters).
pub fn write_k_selection(path: &Path, curve: &KSelectionCurve) -> Result<()> {
    write_rows(
        path,
        &["k", "mean_quotient", "mean_quotient_over_k", "omitted", "quotients"],
        curve.entries.iter().map(|e| {
            [
                e.k.to_string(),
                opt(e.mean_contributing),
                opt(e.mean_over_k),
                e.omitted.to_string(),
                e.quotients.iter().map(|q| opt(*q)).collect::<Vec<_>>().join(";"),
            ]
        }),
    )
}

/// `date,state,epoch,start_date,end_date`; the date is the epoch centre.
pub fn write_timeline(path: &Path, timeline: &StateTimeline) -> Result<()> {
    write_rows(
        path,
        &["date", "state", "epoch", "start_date", "end_date"],
        timeline.entries.iter().map(|e| {
            [
                e.mid_date.to_string(),
                e.state.to_string(),
                e.epoch.to_string(),
                e.start_date.to_string(),
                e.end_date.to_string(),
            ]
        }),
    )
}

/// Per state: number of epochs, mean correlation of the typical state and
/// the first epoch; a final `all` row covers the average over all epochs.
pub fn write_state_table(path: &Path, typical: &TypicalStates) -> Result<()> {
    let total: usize = typical.states.iter().map(|s| s.members()).sum();
    let rows = typical
        .states
        .iter()
        .map(|s| {
            [
                s.state.to_string(),
                s.members().to_string(),
                fmt_f64(s.mean_correlation),
                s.epochs.first().map(usize::to_string).unwrap_or_default(),
            ]
        })
        .chain(std::iter::once([
            "all".to_string(),
            total.to_string(),
            fmt_f64(typical.overall_mean_correlation),
            "1".to_string(),
        ]));
    write_rows(path, &["state", "epochs", "mean_correlation", "first_epoch"], rows)
}

pub fn write_turning_points(path: &Path, report: &TurningPointReport) -> Result<()> {
    write_rows(
        path,
        &["from_epoch", "to_epoch", "last_date", "first_date", "from_state", "to_state", "new_state"],
        report.points.iter().map(|p| {
            [
                p.from_epoch.to_string(),
                p.to_epoch.to_string(),
                p.dates.0.to_string(),
                p.dates.1.to_string(),
                p.from_state.to_string(),
                p.to_state.to_string(),
                p.is_new_state.to_string(),
            ]
        }),
    )
}

/// One line per trial: `K',rep,seed,ari,attempts,degenerate` (rep 1-based).
pub fn write_ari_trials(path: &Path, summaries: &[AriSummary]) -> Result<()> {
    write_rows(
        path,
        &["K'", "rep", "seed", "ari", "attempts", "degenerate"],
        summaries.iter().flat_map(|s| &s.trials).map(|t| {
            [
                t.subset_size.to_string(),
                (t.repetition + 1).to_string(),
                t.seed.to_string(),
                fmt_f64(t.ari),
                t.attempts.to_string(),
                t.degenerate.to_string(),
            ]
        }),
    )
}

pub fn write_ari_summary(path: &Path, summaries: &[AriSummary]) -> Result<()> {
    write_rows(
        path,
        &["K'", "repetitions", "mean", "min", "max", "std"],
        summaries.iter().map(|s| {
            [
                s.subset_size.to_string(),
                s.trials.len().to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.min),
                fmt_f64(s.max),
                fmt_f64(s.std),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub state: usize,
    pub epochs: usize,
    pub mean_correlation: f64,
    pub first_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningPointSummary {
    pub from_epoch: usize,
    pub to_epoch: usize,
    pub last_date: String,
    pub first_date: String,
    pub from_state: usize,
    pub to_state: usize,
    pub new_state: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: String,
    pub requested_k: usize,
    pub attained_k: usize,
    /// k with the largest mean child quotient.
    pub suggested_k: Option<usize>,
    pub overall_mean_correlation: f64,
    pub states: Vec<StateSummary>,
    pub turning_points: Vec<TurningPointSummary>,
}

impl KindSummary {
    pub fn new(
        kind: &str,
        requested_k: usize,
        attained_k: usize,
        suggested_k: Option<usize>,
        typical: &TypicalStates,
        turning: &TurningPointReport,
    ) -> Self {
        Self {
            kind: kind.to_string(),
            requested_k,
            attained_k,
            suggested_k,
            overall_mean_correlation: typical.overall_mean_correlation,
            states: typical
                .states
                .iter()
                .map(|s| StateSummary {
                    state: s.state,
                    epochs: s.members(),
                    mean_correlation: s.mean_correlation,
                    first_epoch: s.epochs.first().copied().unwrap_or(0),
                })
                .collect(),
            turning_points: turning
                .points
                .iter()
                .map(|p| TurningPointSummary {
                    from_epoch: p.from_epoch,
                    to_epoch: p.to_epoch,
                    last_date: p.dates.0.to_string(),
                    first_date: p.dates.1.to_string(),
                    from_state: p.from_state,
                    to_state: p.to_state,
                    new_state: p.is_new_state,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub tickers: usize,
    pub return_days: usize,
    pub epoch_length: usize,
    pub epochs: usize,
    pub dropped_days: usize,
    pub kinds: Vec<KindSummary>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use marketstates_core::clustering::{bisecting_kmeans, PointSet};

    #[test]
    fn cluster_report_round_trips() {
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![(i * i) as f64, (i % 3) as f64]).collect();
        let p = PointSet::from_rows(&rows).unwrap();
        let mut r = bisecting_kmeans(&p, 4, 3, 5).unwrap();
        let doc = ClusterReport::new("standard", &r, 5, 3, RepresentationName::Raw, 3, "centroids.msmx");
        let text = serde_json::to_string(&doc).unwrap();
        let back: ClusterReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        for n in &mut r.nodes {
            n.centroid.clear();
        }
        assert_eq!(back.to_result().unwrap(), r);
        assert_eq!(back.labels(3).unwrap(), r.solution(3).unwrap().labels);
        assert!(doc.solutions[0].labels.iter().all(|&l| l == 1));
    }
}
