use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::corpus::{FilterConfig, Timestamp};
use crate::examples::{Task, DEFAULT_RATES};
use crate::features::{feature_index, FeatureSet};
use crate::learners::Family;
use crate::timeline::ParticipationRule;

/// Fixed configuration for one task, bypassing the RQ1 lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskChoice {
    pub family: Family,
    /// Undersampling rate; participation only.
    #[serde(default)]
    pub rate: Option<f64>,
    /// Feature names for RQ3; `None` uses the RQ2 selection or every feature.
    #[serde(default)]
    pub features: Option<Vec<String>>,
}

/// Everything an experiment run needs besides the corpus itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub corpus_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub tasks: Vec<Task>,
    pub feature_sets: Vec<FeatureSet>,
    pub classifiers: Vec<Family>,
    pub regressors: Vec<Family>,
    pub rates: Vec<f64>,
    /// Training window of RQ1 and RQ2, in 30-day months.
    pub timeframe_months: u32,
    pub period_months: u32,
    pub n_periods: usize,
    /// RQ3 timeframes.
    pub timeframes: Vec<u32>,
    pub rfe_folds: usize,
    pub seed: u64,
    pub apply_filter: bool,
    pub filter: FilterConfig,
    pub participation_rule: ParticipationRule,
    pub include_nonparticipants: bool,
    /// Overrides the corpus span, which otherwise runs from the day of the
    /// first review to the end of the day of the last one.
    pub span: Option<(Timestamp, Timestamp)>,
    pub participation: Option<TaskChoice>,
    pub feedback: Option<TaskChoice>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            corpus_dir: None,
            out_dir: None,
            tasks: vec![Task::Participation, Task::Feedback],
            feature_sets: FeatureSet::EVERY.to_vec(),
            classifiers: Family::CLASSIFIERS.to_vec(),
            regressors: Family::REGRESSORS.to_vec(),
            rates: DEFAULT_RATES.to_vec(),
            timeframe_months: 12,
            period_months: 3,
            n_periods: 5,
            timeframes: vec![3, 6, 9, 12],
            rfe_folds: 4,
            seed: 42,
            apply_filter: true,
            filter: FilterConfig::default(),
            participation_rule: ParticipationRule::default(),
            include_nonparticipants: false,
            span: None,
            participation: None,
            feedback: None,
        }
    }
}

impl ExperimentPlan {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunnerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RunnerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let plan: Self = serde_json::from_str(&text).map_err(|e| RunnerError::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let fail = |m: &str| Err(RunnerError::Plan(m.to_string()));
        if self.tasks.is_empty() || self.feature_sets.is_empty() {
            return fail("tasks and feature_sets must be non-empty");
        }
        if self.tasks.contains(&Task::Participation) && (self.classifiers.is_empty() || self.rates.is_empty()) {
            return fail("participation needs classifiers and rates");
        }
        if self.tasks.contains(&Task::Feedback) && self.regressors.is_empty() {
            return fail("feedback needs regressors");
        }
        if self.classifiers.iter().any(|f| !f.is_classifier()) || self.regressors.iter().any(|f| f.is_classifier()) {
            return fail("classifiers and regressors are swapped");
        }
        if self.rates.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return fail("rates must lie in (0, 1]");
        }
        if self.timeframe_months == 0 || self.period_months == 0 || self.timeframes.contains(&0) {
            return fail("timeframes and periods must be positive");
        }
        if self.timeframes.is_empty() || self.n_periods == 0 {
            return fail("RQ3 needs timeframes and periods");
        }
        if self.rfe_folds < 2 {
            return fail("rfe_folds must be at least 2");
        }
        if self.span.is_some_and(|(a, b)| a >= b) {
            return fail("span must be non-empty");
        }
        for (task, choice) in [(Task::Participation, &self.participation), (Task::Feedback, &self.feedback)] {
            let Some(c) = choice else { continue };
            if c.family.is_classifier() != (task == Task::Participation) {
                return Err(RunnerError::Plan(format!("{} cannot serve the {task} task", c.family)));
            }
            if c.rate.is_some_and(|r| !(r > 0.0 && r <= 1.0)) {
                return fail("override rate must lie in (0, 1]");
            }
            if let Some(bad) = c.features.iter().flatten().find(|f| feature_index(f).is_none()) {
                return Err(RunnerError::Plan(format!("unknown feature {bad:?}")));
            }
        }
        Ok(())
    }

    pub fn families(&self, task: Task) -> &[Family] {
        match task {
            Task::Participation => &self.classifiers,
            Task::Feedback => &self.regressors,
        }
    }

    pub fn choice(&self, task: Task) -> Option<&TaskChoice> {
        match task {
            Task::Participation => self.participation.as_ref(),
            Task::Feedback => self.feedback.as_ref(),
        }
    }

    /// Number of RQ1 cells.
    pub fn rq1_cells(&self) -> usize {
        self.tasks
            .iter()
            .map(|&t| {
                let rates = if t == Task::Participation { self.rates.len() } else { 1 };
                self.feature_sets.len() * self.families(t).len() * rates
            })
            .sum()
    }
}
