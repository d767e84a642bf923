//! Reviewer participation and feedback prediction from code-review history.
//!
//! The pipeline runs corpus → timeline → features → examples → learners,
//! with metrics, selection and the experiment runner on top. `synth`
//! generates corpora with a known generative model.

pub mod corpus;
pub mod timeline;
pub mod features;
pub mod examples;
pub mod learners;
pub mod metrics;
pub mod selection;
pub mod synth;
pub mod runner;

use thiserror::Error;

/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Timeline(#[from] timeline::TimelineError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Example(#[from] examples::ExampleError),
    #[error(transparent)]
    Learn(#[from] learners::LearnError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Selection(#[from] selection::SelectionError),
    #[error(transparent)]
    Runner(#[from] runner::RunnerError),
    #[error("invalid synthetic configuration: {0}")]
    Synth(String),
}
