//! What a cluster solution says about the market: state timelines, typical
//! states, turning points, partition agreement and subset robustness.

mod ari;
mod robustness;
mod states;
mod timeline;

pub use ari::{adjusted_rand_index, pair_counts, rand_index, AdjustedRand, PairCounts};
pub use robustness::{robustness_trial, subset_robustness, AriReport, AriSummary, RobustnessOptions, RobustnessTrial};
pub use states::{
    analyze_states, demeaned_state_analysis, typical_states, StateAnalysis, TypicalState, TypicalStates,
};
pub use timeline::{
    build_timeline, renumber_by_first_appearance, turning_points, CrisisEvent, StateTimeline, TimelineEntry,
    TurningPoint, TurningPointReport,
};
