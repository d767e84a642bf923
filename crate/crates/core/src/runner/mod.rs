//! Experiment orchestration: the RQ1 sweep, RQ2 selection and RQ3
//! timeframe study over one prepared corpus.
//!
//! Cells run on a rayon pool of `jobs` threads. Every cell derives its own
//! seed from the master seed and its coordinates, and results are assembled
//! in plan order, so reports do not depend on scheduling.

mod plan;
mod report;
mod rq;

use std::path::PathBuf;

use thiserror::Error;

pub use plan::{ExperimentPlan, TaskChoice};
pub use report::{render_table, write_timings, ExperimentReport, ReportRow, Rq2Report, Rq2TaskResult, Timing};
pub use rq::{choose_config, prepare, run_rq1, run_rq2, run_rq3, Prepared};

use crate::corpus::CorpusError;
use crate::examples::{ExampleError, Task};
use crate::learners::LearnError;
use crate::metrics::MetricsError;
use crate::selection::SelectionError;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("no RQ1 result to choose a configuration for the {0} task")]
    MissingRq1Report(Task),
    #[error("temporal leak: {0}")]
    Leak(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Example(#[from] ExampleError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl RunnerError {
    /// True for errors in the plan or its inputs rather than in the data.
    pub fn is_plan_error(&self) -> bool {
        matches!(
            self,
            RunnerError::Plan(_)
                | RunnerError::MissingRq1Report(_)
                | RunnerError::Example(ExampleError::InsufficientSpan { .. })
                | RunnerError::Format { .. }
        )
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one cell, a hash of the master seed and the cell coordinates.
/// Adding or removing cells never changes another cell's seed.
pub fn cell_seed(master: u64, coordinates: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, c) in coordinates.iter().enumerate() {
        if i > 0 {
            h = (h ^ 0x1f).wrapping_mul(FNV_PRIME);
        }
        for b in c.bytes() {
            h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
        }
    }
    splitmix64(master ^ splitmix64(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_seeds_depend_on_every_coordinate() {
        let a = cell_seed(1, &["rq1", "ALL", "lr", "0.05"]);
        assert_eq!(a, cell_seed(1, &["rq1", "ALL", "lr", "0.05"]));
        assert_ne!(a, cell_seed(2, &["rq1", "ALL", "lr", "0.05"]));
        assert_ne!(a, cell_seed(1, &["rq1", "ALL", "lr", "0.5"]));
        // the separator keeps coordinate boundaries apart
        assert_ne!(cell_seed(1, &["ab", "c"]), cell_seed(1, &["a", "bc"]));
    }
}
