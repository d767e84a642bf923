//! Labeled (review, candidate) examples, undersampling and temporal windows.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, ReviewRecord, Timestamp, SECONDS_PER_DAY};
use crate::features::{FeatureError, FeatureVector, ReviewContext};
use crate::timeline::TemporalIndex;

pub const SECONDS_PER_MONTH: i64 = 30 * SECONDS_PER_DAY;

/// Undersampling rates swept by default.
pub const DEFAULT_RATES: [f64; 6] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.50];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExampleError {
    #[error("corpus span of {span_secs}s cannot fit {needed_secs}s of windows")]
    InsufficientSpan { span_secs: i64, needed_secs: i64 },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("sampling rate {0} outside (0, 1]")]
    InvalidRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Participation,
    Feedback,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Participation => "participation",
            Task::Feedback => "feedback",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "participation" => Ok(Task::Participation),
            "feedback" => Ok(Task::Feedback),
            _ => Err(format!("unknown task {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub review_id: String,
    pub candidate_id: String,
    pub features: FeatureVector,
    pub participated: bool,
    pub comment_count: u32,
    pub log_feedback: f64,
}

pub fn log_feedback(comment_count: u32) -> f64 {
    (1.0 + comment_count as f64).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub train_start: Timestamp,
    pub train_end: Timestamp,
    pub test_start: Timestamp,
    pub test_end: Timestamp,
}

impl WindowSpec {
    pub fn new(
        train_start: Timestamp,
        train_end: Timestamp,
        test_start: Timestamp,
        test_end: Timestamp,
    ) -> Result<Self, ExampleError> {
        let w = Self {
            train_start,
            train_end,
            test_start,
            test_end,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ExampleError> {
        if self.train_start < self.train_end
            && self.train_end <= self.test_start
            && self.test_start < self.test_end
        {
            Ok(())
        } else {
            Err(ExampleError::InvalidWindow(format!("{self:?}")))
        }
    }

    pub fn phase_interval(&self, phase: Phase) -> (Timestamp, Timestamp) {
        match phase {
            Phase::Train => (self.train_start, self.train_end),
            Phase::Test => (self.test_start, self.test_end),
        }
    }

    /// Boundary between the fitting part and the validation tail of the
    /// training interval.
    ///
    /// The tail is the last `period_secs`; when that would swallow the whole
    /// interval the last third is used instead.
    pub fn validation_start(&self, period_secs: i64) -> Timestamp {
        let tail = self.train_end - period_secs;
        if tail > self.train_start {
            tail
        } else {
            self.train_end - (self.train_end - self.train_start) / 3
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleOptions {
    pub task: Task,
    /// Keep zero-comment candidates in the feedback task.
    pub include_nonparticipants: bool,
}

impl ExampleOptions {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            include_nonparticipants: false,
        }
    }
}

/// Developers employed at the review's creation, minus its author.
pub fn candidate_pool(index: &TemporalIndex, review: &ReviewRecord) -> BTreeSet<String> {
    index
        .employed_at(review.created_at)
        .into_iter()
        .filter(|&d| d != review.author_id)
        .map(str::to_string)
        .collect()
}

fn review_examples(
    index: &TemporalIndex,
    review: &ReviewRecord,
    history_start: Timestamp,
    opts: ExampleOptions,
) -> Result<Vec<TrainingExample>, FeatureError> {
    let ctx = ReviewContext::new(index, review, history_start)?;
    let mut out = Vec::new();
    for candidate in candidate_pool(index, review) {
        let participated = index.is_reviewer(&review.review_id, &candidate);
        if opts.task == Task::Feedback && !participated && !opts.include_nonparticipants {
            continue;
        }
        let comment_count = index.comment_count(&review.review_id, &candidate);
        out.push(TrainingExample {
            review_id: review.review_id.clone(),
            features: ctx.features(&candidate)?,
            candidate_id: candidate,
            participated,
            comment_count,
            log_feedback: log_feedback(comment_count),
        });
    }
    Ok(out)
}

/// Examples for reviews created in `[from, to)`, with feature history
/// starting at `history_start`.
///
/// Reviews whose author has no org assignment at creation time are skipped
/// with a warning. Output is sorted by (review_id, candidate_id).
pub fn build_examples_between(
    corpus: &Corpus,
    index: &TemporalIndex,
    from: Timestamp,
    to: Timestamp,
    history_start: Timestamp,
    opts: ExampleOptions,
) -> Vec<TrainingExample> {
    let reviews = corpus.reviews();
    let lo = reviews.partition_point(|r| r.created_at < from);
    let hi = reviews.partition_point(|r| r.created_at < to).max(lo);
    let mut out: Vec<TrainingExample> = reviews[lo..hi]
        .par_iter()
        .map(|r| match review_examples(index, r, history_start, opts) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("skipping review {}: {e}", r.review_id);
                Vec::new()
            }
        })
        .flatten()
        .collect();
    out.sort_by(|a, b| {
        (a.review_id.as_str(), a.candidate_id.as_str()).cmp(&(b.review_id.as_str(), b.candidate_id.as_str()))
    });
    out
}

/// Examples for one phase of a window; both phases count history from
/// `train_start`.
pub fn build_examples(
    corpus: &Corpus,
    index: &TemporalIndex,
    window: &WindowSpec,
    phase: Phase,
    opts: ExampleOptions,
) -> Vec<TrainingExample> {
    let (from, to) = window.phase_interval(phase);
    build_examples_between(corpus, index, from, to, window.train_start, opts)
}

/// Number of negatives kept: `rate × n` rounded half-up, at least one.
pub fn undersample_count(n_negatives: usize, rate: f64) -> usize {
    if n_negatives == 0 {
        return 0;
    }
    let k = (rate * n_negatives as f64 + 0.5 + 1e-9).floor() as usize;
    k.clamp(1, n_negatives)
}

/// Indices kept by undersampling, ascending.
pub fn undersample_indices(labels: &[bool], cfg: &SamplingConfig) -> Result<Vec<usize>, ExampleError> {
    if !(cfg.rate > 0.0 && cfg.rate <= 1.0) {
        return Err(ExampleError::InvalidRate(cfg.rate));
    }
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let k = undersample_count(negatives.len(), cfg.rate);
    let mut keep = vec![false; labels.len()];
    for (i, &l) in labels.iter().enumerate() {
        keep[i] = l;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for j in sample(&mut rng, negatives.len(), k) {
        keep[negatives[j]] = true;
    }
    Ok((0..labels.len()).filter(|&i| keep[i]).collect())
}

/// Keeps every positive and a seeded uniform subset of the negatives,
/// preserving input order.
pub fn undersample(
    examples: &[TrainingExample],
    cfg: &SamplingConfig,
) -> Result<Vec<TrainingExample>, ExampleError> {
    let labels: Vec<bool> = examples.iter().map(|e| e.participated).collect();
    Ok(undersample_indices(&labels, cfg)?
        .into_iter()
        .map(|i| examples[i].clone())
        .collect())
}

/// Consecutive test periods after an initial `timeframe_months` of history,
/// each trained on the `timeframe_months` right before it.
pub fn make_windows(
    span: (Timestamp, Timestamp),
    timeframe_months: u32,
    n_periods: usize,
    period_months: u32,
) -> Result<Vec<WindowSpec>, ExampleError> {
    if n_periods == 0 {
        return Ok(Vec::new());
    }
    let tf = timeframe_months as i64 * SECONDS_PER_MONTH;
    let period = period_months as i64 * SECONDS_PER_MONTH;
    let needed = tf + n_periods as i64 * period;
    let span_secs = span.1 - span.0;
    if tf <= 0 || period <= 0 || needed > span_secs {
        return Err(ExampleError::InsufficientSpan {
            span_secs,
            needed_secs: needed,
        });
    }
    (0..n_periods as i64)
        .map(|k| {
            let test_start = span.0 + tf + k * period;
            WindowSpec::new(test_start - tf, test_start, test_start, test_start + period)
        })
        .collect()
}

/// Windows for several timeframes sharing the same test periods.
///
/// Test periods start after the longest timeframe, so shorter timeframes
/// skip the beginning of the span.
pub fn make_aligned_windows(
    span: (Timestamp, Timestamp),
    timeframes: &[u32],
    n_periods: usize,
    period_months: u32,
) -> Result<Vec<(u32, Vec<WindowSpec>)>, ExampleError> {
    let longest = timeframes.iter().copied().max().unwrap_or(0);
    timeframes
        .iter()
        .map(|&tf| {
            let shift = (longest - tf) as i64 * SECONDS_PER_MONTH;
            make_windows((span.0 + shift, span.1), tf, n_periods, period_months).map(|w| (tf, w))
        })
        .collect()
}
