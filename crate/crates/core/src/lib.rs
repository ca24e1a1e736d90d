//! Temporal social influence in listening logs.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`] parses and indexes scrobble logs and friendship graphs.
//! - [`influence_analysis`] measures friend versus non-friend adoption delays
//!   and the resulting effectivity curve.
//! - [`influence_rec`] is the online friend-influence recommender.
//! - [`baselines`] holds the sliding-window popularity and factor-model
//!   recommenders.
//! - [`evaluation`] replays a log, scores every recommender with DCG@K and
//!   blends them by reciprocal rank.
//! - [`synthgen`] generates seeded synthetic graphs and timelines with
//!   dialable homophily, trend and influence.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod influence_analysis;
pub mod influence_rec;
pub mod ranking;
pub mod stats;
pub mod synthgen;

pub use error::{Error, Result};
pub use ranking::{ArtistId, RankedList, ScoredArtist, UserId};

/// Seconds in one day.
pub const DAY: i64 = 86_400;
/// Seconds in one week, the default time frame.
pub const WEEK: i64 = 7 * DAY;
