//! Baseline recommenders: sliding-window popularity and a sequential
//! per-feature factor model trained on implicit feedback.

mod factor;
mod popularity;

pub use factor::{
    factor_recommend, sample_negatives, train_factor, FactorConfig, FactorModel, TrainingRecord,
    TrainingSet,
};
pub use popularity::PopularityWindow;
