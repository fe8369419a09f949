use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::epoch::EpochInfo;
use crate::error::{Error, Result};

/// A dated event to mark on a timeline.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CrisisEvent {
    pub date: NaiveDate,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineEntry {
    /// 1-based epoch number.
    pub epoch: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub mid_date: NaiveDate,
    /// 1-based state; states are numbered by first appearance.
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTimeline {
    pub entries: Vec<TimelineEntry>,
    /// Number of distinct states.
    pub state_count: usize,
    /// Sorted by date.
    pub events: Vec<CrisisEvent>,
}

impl StateTimeline {
    pub fn states(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.state).collect()
    }

    /// Epochs per state, index 0 holding state 1.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.state_count];
        for e in &self.entries {
            counts[e.state - 1] += 1;
        }
        counts
    }

    pub fn with_events(mut self, mut events: Vec<CrisisEvent>) -> Self {
        events.sort();
        self.events = events;
        self
    }
}

/// Maps arbitrary labels to 1, 2, ... in order of first appearance.
pub fn renumber_by_first_appearance(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len() + 1;
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Attaches epoch dates to a partition and renumbers its states.
pub fn build_timeline(labels: &[usize], epochs: &[EpochInfo]) -> Result<StateTimeline> {
    if labels.len() != epochs.len() {
        return Err(Error::PartitionMismatch {
            left: labels.len(),
            right: epochs.len(),
        });
    }
    let states = renumber_by_first_appearance(labels);
    let state_count = states.iter().copied().max().unwrap_or(0);
    let entries = epochs
        .iter()
        .zip(states)
        .map(|(info, state)| TimelineEntry {
            epoch: info.index,
            start_date: info.start_date,
            end_date: info.end_date,
            mid_date: info.mid_date,
            state,
        })
        .collect();
    Ok(StateTimeline {
        entries,
        state_count,
        events: Vec::new(),
    })
}

/// A change of state between consecutive epochs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurningPoint {
    pub from_epoch: usize,
    pub to_epoch: usize,
    /// Last day of the earlier epoch and first day of the later one.
    pub dates: (NaiveDate, NaiveDate),
    pub from_state: usize,
    pub to_state: usize,
    /// The later state had never occurred before.
    pub is_new_state: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TurningPointReport {
    pub points: Vec<TurningPoint>,
}

impl TurningPointReport {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Every label change along the timeline.
pub fn turning_points(timeline: &StateTimeline) -> TurningPointReport {
    let mut seen = alloc::collections::BTreeSet::new();
    let mut points = Vec::new();
    if let Some(first) = timeline.entries.first() {
        seen.insert(first.state);
    }
    for pair in timeline.entries.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.state != b.state {
            points.push(TurningPoint {
                from_epoch: a.epoch,
                to_epoch: b.epoch,
                dates: (a.end_date, b.start_date),
                from_state: a.state,
                to_state: b.state,
                is_new_state: seen.insert(b.state),
            });
        }
    }
    TurningPointReport { points }
}
