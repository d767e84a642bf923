use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use super::report::{ExperimentReport, ReportRow, Rq2Report, Rq2TaskResult, Timing};
use super::{cell_seed, ExperimentPlan, RunnerError};
use crate::corpus::{filter_corpus, Corpus, Timestamp, SECONDS_PER_DAY};
use crate::examples::{
    build_examples, make_aligned_windows, undersample_indices, ExampleError, ExampleOptions, Phase, SamplingConfig,
    Task, TrainingExample, WindowSpec, SECONDS_PER_MONTH,
};
use crate::features::{FeatureSelector, FeatureSet};
use crate::learners::{
    default_grid, feedback_targets, grid_search, participation_labels, train, Family, Matrix, Scoring,
};
use crate::metrics::{classification_report, regression_report, Metric};
use crate::selection::{importance, rfe, temporal_folds, Fold, RfeConfig};
use crate::timeline::TemporalIndex;

/// A filtered corpus with its temporal index and experiment span.
pub struct Prepared {
    pub corpus: Corpus,
    pub index: TemporalIndex,
    pub span: (Timestamp, Timestamp),
    created: HashMap<String, Timestamp>,
}

impl Prepared {
    fn created_at(&self, review_id: &str) -> Timestamp {
        self.created[review_id]
    }
}

/// Filters the corpus per the plan, builds the index and fixes the span:
/// from midnight of the first review's day to the end of the last review's
/// day, unless the plan overrides it.
pub fn prepare(corpus: &Corpus, plan: &ExperimentPlan) -> Result<Prepared, RunnerError> {
    plan.validate()?;
    let corpus = if plan.apply_filter {
        filter_corpus(corpus, &plan.filter)
    } else {
        corpus.clone()
    };
    let span = match (plan.span, corpus.span()) {
        (Some(s), _) => s,
        (None, Some((first, end))) => {
            let day = |t: Timestamp| t.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY;
            (day(first), day(end - 1) + SECONDS_PER_DAY)
        }
        (None, None) => return Err(RunnerError::Plan("corpus has no reviews left after filtering".into())),
    };
    let index = TemporalIndex::build(&corpus, plan.participation_rule);
    let created = corpus
        .reviews()
        .iter()
        .map(|r| (r.review_id.clone(), r.created_at))
        .collect();
    Ok(Prepared {
        corpus,
        index,
        span,
        created,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, RunnerError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RunnerError::Plan(format!("cannot start {jobs} workers: {e}")))
}

/// RQ1 and RQ2 window: the last period of the span is the test interval and
/// the `timeframe_months` before it the training interval.
pub(crate) fn rq1_window(plan: &ExperimentPlan, span: (Timestamp, Timestamp)) -> Result<WindowSpec, RunnerError> {
    let period = plan.period_months as i64 * SECONDS_PER_MONTH;
    let tf = plan.timeframe_months as i64 * SECONDS_PER_MONTH;
    let test_start = span.1 - period;
    if test_start - tf < span.0 {
        return Err(ExampleError::InsufficientSpan {
            span_secs: span.1 - span.0,
            needed_secs: tf + period,
        }
        .into());
    }
    Ok(WindowSpec::new(test_start - tf, test_start, test_start, span.1)?)
}

struct TaskData {
    window: WindowSpec,
    validation_start: Timestamp,
    train: Vec<TrainingExample>,
    train_times: Vec<Timestamp>,
    test: Vec<TrainingExample>,
}

fn leak(msg: String) -> RunnerError {
    RunnerError::Leak(msg)
}

fn task_data(p: &Prepared, plan: &ExperimentPlan, task: Task, window: WindowSpec) -> Result<TaskData, RunnerError> {
    let opts = ExampleOptions {
        task,
        include_nonparticipants: plan.include_nonparticipants,
    };
    let train = build_examples(&p.corpus, &p.index, &window, Phase::Train, opts);
    let test = build_examples(&p.corpus, &p.index, &window, Phase::Test, opts);
    let train_times: Vec<Timestamp> = train.iter().map(|e| p.created_at(&e.review_id)).collect();
    if let Some(t) = train_times.iter().find(|&&t| t < window.train_start || t >= window.train_end) {
        return Err(leak(format!("training example at {t} outside {window:?}")));
    }
    if window.train_end > window.test_start {
        return Err(leak(format!("training interval overlaps the test interval in {window:?}")));
    }
    if let Some(e) = test.iter().find(|e| {
        let t = p.created_at(&e.review_id);
        t < window.test_start || t >= window.test_end
    }) {
        return Err(leak(format!("test example {} outside {window:?}", e.review_id)));
    }
    let validation_start = window.validation_start(plan.period_months as i64 * SECONDS_PER_MONTH);
    Ok(TaskData {
        window,
        validation_start,
        train,
        train_times,
        test,
    })
}

fn targets(task: Task, examples: &[TrainingExample]) -> Vec<f64> {
    match task {
        Task::Participation => participation_labels(examples),
        Task::Feedback => feedback_targets(examples),
    }
}

/// Undersamples the rows `idx` of `y` when a rate is given.
fn sample_rows(idx: &[usize], y: &[f64], rate: Option<f64>, seed: u64) -> Result<Vec<usize>, RunnerError> {
    let Some(rate) = rate else {
        return Ok(idx.to_vec());
    };
    let labels: Vec<bool> = idx.iter().map(|&i| y[i] > 0.5).collect();
    Ok(undersample_indices(&labels, &SamplingConfig { rate, seed })?
        .into_iter()
        .map(|k| idx[k])
        .collect())
}

struct Cell {
    task: Task,
    selector: FeatureSelector,
    family: Family,
    rate: Option<f64>,
    seed: u64,
}

/// Grid search on the fitting part, refit on the whole training interval
/// and test. Leaks abort; every other failure lands in the row.
fn evaluate(data: &TaskData, cell: &Cell, row: &mut ReportRow) -> Result<(), RunnerError> {
    let y = targets(cell.task, &data.train);
    let (fit, valid): (Vec<usize>, Vec<usize>) =
        (0..data.train.len()).partition(|&i| data.train_times[i] < data.validation_start);
    if valid.iter().any(|&i| data.train_times[i] >= data.window.test_start) {
        return Err(leak("validation rows reach into the test interval".into()));
    }
    let rate = if cell.task == Task::Participation { cell.rate } else { None };
    let fit = sample_rows(&fit, &y, rate, cell.seed)?;
    let all: Vec<usize> = (0..data.train.len()).collect();
    let full = sample_rows(&all, &y, rate, cell.seed)?;
    let x = Matrix::from_examples(&data.train, &cell.selector);
    let pick = |rows: &[usize]| (x.select_rows(rows), rows.iter().map(|&i| y[i]).collect::<Vec<f64>>());
    let (fit_x, fit_y) = pick(&fit);
    let (val_x, val_y) = pick(&valid);
    let (full_x, full_y) = pick(&full);
    row.n_train = full.len();
    row.n_test = data.test.len();

    let scoring = Scoring::for_family(cell.family);
    let best = grid_search(&default_grid(cell.family), cell.seed, (&fit_x, &fit_y), (&val_x, &val_y), scoring)?.best;
    row.hyperparameters = best.algorithm.describe();
    let model = train(&best, &full_x, &full_y)?;
    let test_x = Matrix::from_examples(&data.test, &cell.selector);
    let test_y = targets(cell.task, &data.test);
    match cell.task {
        Task::Participation => {
            let scores = model.predict_scores(&test_x)?;
            let labels: Vec<bool> = test_y.iter().map(|&v| v > 0.5).collect();
            let preds: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
            let r = classification_report(&labels, &preds, &scores)?;
            (row.precision, row.recall, row.f1, row.auprc) = (r.precision, r.recall, r.f1, r.auprc);
        }
        Task::Feedback => {
            let preds = model.predict_values(&test_x)?;
            let r = regression_report(&test_y, &preds)?;
            (row.rmse, row.pearson_r, row.r2) = (Metric::Defined(r.rmse), r.pearson_r, r.r2);
        }
    }
    Ok(())
}

fn run_cell(data: &TaskData, cell: &Cell, mut row: ReportRow) -> Result<(ReportRow, Timing), RunnerError> {
    let started = Instant::now();
    row.rate = if cell.task == Task::Participation { cell.rate } else { None };
    match evaluate(data, cell, &mut row) {
        Ok(()) => {}
        Err(e @ RunnerError::Leak(_)) => return Err(e),
        Err(e) => {
            log::warn!("cell {} failed: {e}", row.key());
            row.error = Some(e.to_string());
        }
    }
    let timing = Timing {
        cell: row.key(),
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok((row, timing))
}

fn rate_label(rate: Option<f64>) -> String {
    rate.map_or_else(|| "-".to_string(), |r| r.to_string())
}

/// Feature set × algorithm × rate sweep on the RQ1 window.
pub fn run_rq1(p: &Prepared, plan: &ExperimentPlan, jobs: usize) -> Result<(ExperimentReport, Vec<Timing>), RunnerError> {
    plan.validate()?;
    let window = rq1_window(plan, p.span)?;
    let mut data = HashMap::new();
    for &task in &plan.tasks {
        data.insert(task, task_data(p, plan, task, window)?);
    }
    let mut cells = Vec::with_capacity(plan.rq1_cells());
    for &task in &plan.tasks {
        let rates: Vec<Option<f64>> = match task {
            Task::Participation => plan.rates.iter().map(|&r| Some(r)).collect(),
            Task::Feedback => vec![None],
        };
        for &set in &plan.feature_sets {
            for &family in plan.families(task) {
                for &rate in &rates {
                    let seed = cell_seed(
                        plan.seed,
                        &["rq1", task.name(), set.name(), family.name(), &rate_label(rate)],
                    );
                    cells.push(Cell {
                        task,
                        selector: set.into(),
                        family,
                        rate,
                        seed,
                    });
                }
            }
        }
    }
    let results: Vec<Result<(ReportRow, Timing), RunnerError>> = pool(jobs)?.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let row = ReportRow::empty("rq1", c.task, &c.selector.name, c.family, c.seed);
                run_cell(&data[&c.task], c, row)
            })
            .collect()
    });
    let (rows, timings) = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    Ok((ExperimentReport { rows }, timings))
}

/// Family and rate for `task`: the plan's override, or the RQ1 row with
/// the best F1 / R² (ALL-feature rows preferred, earliest row on ties).
pub fn choose_config(
    plan: &ExperimentPlan,
    task: Task,
    rq1: Option<&ExperimentReport>,
) -> Result<(Family, Option<f64>, String), RunnerError> {
    if let Some(c) = plan.choice(task) {
        let rate = match task {
            Task::Participation => Some(c.rate.unwrap_or(0.25)),
            Task::Feedback => None,
        };
        return Ok((c.family, rate, "override".into()));
    }
    let rows: Vec<&ReportRow> = rq1
        .map(|r| {
            r.rows
                .iter()
                .filter(|r| r.task == task && r.error.is_none() && r.timeframe_months.is_none())
                .collect()
        })
        .unwrap_or_default();
    let all_name = FeatureSet::All.name();
    let preferred: Vec<&ReportRow> = if rows.iter().any(|r| r.feature_set == all_name) {
        rows.into_iter().filter(|r| r.feature_set == all_name).collect()
    } else {
        rows
    };
    let mut best: Option<(f64, &ReportRow)> = None;
    for r in preferred {
        let v = r.headline().value().unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, r));
        }
    }
    let (_, row) = best.ok_or(RunnerError::MissingRq1Report(task))?;
    Ok((row.family, row.rate, "rq1".into()))
}

/// RFE over temporal folds of the RQ1 training interval plus the importance
/// measures, per task.
pub fn run_rq2(
    p: &Prepared,
    plan: &ExperimentPlan,
    rq1: Option<&ExperimentReport>,
    jobs: usize,
) -> Result<Rq2Report, RunnerError> {
    plan.validate()?;
    let window = rq1_window(plan, p.span)?;
    let choices = plan
        .tasks
        .iter()
        .map(|&t| choose_config(plan, t, rq1).map(|c| (t, c)))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = pool(jobs)?;
    let mut results = Vec::new();
    for (task, (family, rate, source)) in choices {
        let data = task_data(p, plan, task, window)?;
        let x = Matrix::from_examples(&data.train, &FeatureSet::All.into());
        let y = targets(task, &data.train);
        let rate = if task == Task::Participation { rate } else { None };
        let folds: Vec<Fold> = temporal_folds(&data.train_times, window.train_start, window.train_end, plan.rfe_folds)
            .into_iter()
            .enumerate()
            .map(|(k, f)| {
                let seed = cell_seed(plan.seed, &["rq2", task.name(), "fold", &k.to_string()]);
                Ok(Fold {
                    train: sample_rows(&f.train, &y, rate, seed)?,
                    validation: f.validation,
                })
            })
            .collect::<Result<_, RunnerError>>()?;
        let seed = cell_seed(plan.seed, &["rq2", task.name()]);
        let all: Vec<usize> = (0..x.rows()).collect();
        let rows = sample_rows(&all, &y, rate, seed)?;
        let (rfe_result, imp) = pool.install(|| {
            let r = rfe(&x, &y, &folds, &RfeConfig::new(family, seed));
            let sub_y: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            let i = importance(&x.select_rows(&rows), &sub_y, task, seed);
            (r, i)
        });
        results.push(Rq2TaskResult {
            task,
            family,
            rate,
            source,
            rfe: rfe_result?,
            importance: imp?,
        });
    }
    Ok(Rq2Report { results })
}

/// Timeframe × period grid with the RQ1-chosen configuration and the RQ2
/// feature selection (every feature when there is none).
pub fn run_rq3(
    p: &Prepared,
    plan: &ExperimentPlan,
    rq1: Option<&ExperimentReport>,
    rq2: Option<&Rq2Report>,
    jobs: usize,
) -> Result<(ExperimentReport, Vec<Timing>), RunnerError> {
    plan.validate()?;
    let windows = make_aligned_windows(p.span, &plan.timeframes, plan.n_periods, plan.period_months)?;
    let mut cells = Vec::new();
    for &task in &plan.tasks {
        let (family, rate, _) = choose_config(plan, task, rq1)?;
        let features: Option<Vec<String>> = plan
            .choice(task)
            .and_then(|c| c.features.clone())
            .or_else(|| rq2.and_then(|r| r.selected(task)).map(<[String]>::to_vec));
        let selector = match features {
            None => FeatureSet::All.into(),
            Some(f) => {
                let s = FeatureSelector::from_names("selected", &f).map_err(|e| RunnerError::Plan(e.to_string()))?;
                if s.mask == FeatureSet::All.mask() {
                    FeatureSet::All.into()
                } else {
                    s
                }
            }
        };
        for (tf, ws) in &windows {
            for (k, w) in ws.iter().enumerate() {
                let seed = cell_seed(plan.seed, &["rq3", task.name(), &tf.to_string(), &k.to_string()]);
                cells.push((
                    *tf,
                    k,
                    *w,
                    Cell {
                        task,
                        selector: selector.clone(),
                        family,
                        rate,
                        seed,
                    },
                ));
            }
        }
    }
    let results: Vec<Result<(ReportRow, Timing), RunnerError>> = pool(jobs)?.install(|| {
        cells
            .par_iter()
            .map(|(tf, k, w, c)| {
                let mut row = ReportRow::empty("rq3", c.task, &c.selector.name, c.family, c.seed);
                row.timeframe_months = Some(*tf);
                row.period = Some(*k);
                let data = task_data(p, plan, c.task, *w)?;
                run_cell(&data, c, row)
            })
            .collect()
    });
    let (rows, timings) = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    Ok((ExperimentReport { rows }, timings))
}
