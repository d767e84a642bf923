//! Feature ranking: recursive elimination with temporal folds and the
//! per-feature importance measures.

mod importance;
mod rfe;

use thiserror::Error;

pub use importance::{
    chi_squared, discretize, gain_ratio, importance, information_gain, rrelieff, FeatureImportance,
    ImportanceReport, MIN_EXAMPLES, N_BINS, RELIEF_NEIGHBORS,
};
pub use rfe::{rfe, temporal_folds, Fold, RfeConfig, RfeResult, RfeStep, TIE_TOLERANCE};

use crate::learners::LearnError;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("need at least 2 temporal folds, got {0}")]
    InsufficientFolds(usize),
    #[error("fold {0} has no training or validation rows")]
    EmptyFold(usize),
    #[error("need at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("need at least 20 examples, got {0}")]
    TooFewExamples(usize),
    #[error("feature {0:?} has fewer than 2 distinct values")]
    DegenerateDiscretization(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
}
