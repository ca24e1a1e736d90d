//! Streaming top-k evaluation.
//!
//! The replay walks the log in time order. At each distinct timestamp every
//! recommender is first queried for the evaluation events at that instant,
//! and only afterwards fed the scrobbles and friendships of the instant, so a
//! ranked list never depends on anything at or after its own timestamp.

mod blend;
mod recommenders;
mod replay;
mod report;
mod sweep;

pub use blend::{blend_ranked_lists, blended_rank, BlendSpec};
pub use recommenders::{
    FactorRecommender, InfluenceRecommender, OnlineRecommender, PopularityRecommender,
    StandardSetup,
};
pub use replay::{run_evaluation, run_evaluation_with_probe, trace_components, QueryProbe};
pub use report::{AggregateRow, EvalReport, EventRecord};
pub use sweep::{
    simplex_grid, sweep_blend_weights, sweep_tau, sweep_weights, write_sweep_csv, ComponentTrace,
    SweepRow, TracedEvent,
};

use crate::error::{Error, Result};
use crate::WEEK;

/// `1 / log2(rank + 1)` when the item is ranked within `k`, else 0.
pub fn dcg_at_k(rank: Option<usize>, k: usize) -> f64 {
    match rank {
        Some(r) if r >= 1 && r <= k => 1.0 / ((r + 1) as f64).log2(),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// End of the training period; everything before the test range only
    /// updates recommender state.
    pub train_end: i64,
    /// `[start, end)` of the evaluated events.
    pub test_start: i64,
    pub test_end: i64,
    pub k_values: Vec<usize>,
    /// Factor models are retrained at `test_start + i * retrain_interval`.
    pub retrain_interval: i64,
    pub tau: i64,
    /// Evaluate only first-time user-artist scrobbles.
    pub first_time_only: bool,
    /// Stop the replay after the queries at this timestamp.
    pub stop_after: Option<i64>,
}

impl EvalConfig {
    /// Test range starting at `train_end` and running to the end of time.
    pub fn new(train_end: i64) -> Self {
        Self {
            train_end,
            test_start: train_end,
            test_end: i64::MAX,
            k_values: vec![20, 100],
            retrain_interval: WEEK,
            tau: WEEK,
            first_time_only: true,
            stop_after: None,
        }
    }

    pub fn max_k(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_end > self.test_start {
            return Err(Error::Config(
                "train_end must not exceed the test start".into(),
            ));
        }
        if self.retrain_interval <= 0 {
            return Err(Error::Config("retrain_interval must be positive".into()));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::Config(
                "k values must be nonempty and at least 1".into(),
            ));
        }
        if self.tau <= 1 {
            return Err(Error::Config("tau must exceed 1 second".into()));
        }
        Ok(())
    }
}
