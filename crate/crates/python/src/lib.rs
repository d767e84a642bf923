//! Python module `revsignal`: corpus loading, synthetic corpora, example
//! building, models, metrics and the experiment stages.
//!
//! Undefined metrics come back as `None`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use revsignal::corpus::{filter_corpus, load_corpus_dir, FilterConfig, SECONDS_PER_DAY};
use revsignal::examples::{build_examples, make_windows, undersample, ExampleOptions, Phase, SamplingConfig, Task};
use revsignal::features::FEATURE_NAMES;
use revsignal::learners::{model_from_json, model_to_json, Algorithm, Family, Matrix, ModelSpec, TrainedModel};
use revsignal::metrics::Metric;
use revsignal::runner::{prepare, run_rq1, run_rq2, run_rq3, ExperimentPlan, ExperimentReport, Rq2Report};
use revsignal::synth::{generate, write_synth, SynthConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn opt(m: Metric) -> Option<f64> {
    m.value()
}

fn parse_task(task: &str) -> PyResult<Task> {
    task.parse().map_err(PyValueError::new_err)
}

/// A validated review corpus.
#[pyclass(frozen, module = "revsignal")]
struct Corpus(revsignal::corpus::Corpus);

#[pymethods]
impl Corpus {
    #[getter]
    fn n_reviews(&self) -> usize {
        self.0.reviews().len()
    }

    fn developers(&self) -> Vec<String> {
        self.0.developers().into_iter().map(str::to_string).collect()
    }

    fn module_ids(&self) -> Vec<String> {
        self.0.modules().iter().map(|m| m.module_id.clone()).collect()
    }

    /// First and last review creation times, or None for an empty corpus.
    fn span(&self) -> Option<(i64, i64)> {
        self.0.span()
    }

    #[pyo3(signature = (max_loc = 5000, max_duration_days = 30, keep_bots = false))]
    fn filter(&self, max_loc: u64, max_duration_days: i64, keep_bots: bool) -> Self {
        let rules = FilterConfig {
            max_loc,
            max_duration_secs: max_duration_days * SECONDS_PER_DAY,
            keep_bots,
            ..FilterConfig::default()
        };
        Corpus(filter_corpus(&self.0, &rules))
    }

    /// Labelled examples of one window phase as `(ids, features, labels)`:
    /// `ids` are (review, candidate) pairs, `features` rows in
    /// `FEATURE_NAMES` order, `labels` (participated, comment_count,
    /// log_feedback) triples.
    #[pyo3(signature = (task = "participation", timeframe = 12, period = 3, window = 0, phase = "train", rate = None, seed = 0))]
    #[allow(clippy::too_many_arguments, clippy::type_complexity)]
    fn examples(
        &self,
        py: Python<'_>,
        task: &str,
        timeframe: u32,
        period: u32,
        window: usize,
        phase: &str,
        rate: Option<f64>,
        seed: u64,
    ) -> PyResult<(Vec<(String, String)>, Vec<Vec<f64>>, Vec<(bool, u32, f64)>)> {
        let task = parse_task(task)?;
        let phase = match phase {
            "train" => Phase::Train,
            "test" => Phase::Test,
            _ => return Err(PyValueError::new_err(format!("unknown phase {phase:?}"))),
        };
        let plan = ExperimentPlan {
            apply_filter: false,
            ..ExperimentPlan::default()
        };
        let ex = py.detach(|| -> Result<_, String> {
            let p = prepare(&self.0, &plan).map_err(|e| e.to_string())?;
            let w = make_windows(p.span, timeframe, window + 1, period).map_err(|e| e.to_string())?[window];
            let mut ex = build_examples(&p.corpus, &p.index, &w, phase, ExampleOptions::new(task));
            if let (Some(rate), Task::Participation, Phase::Train) = (rate, task, phase) {
                ex = undersample(&ex, &SamplingConfig { rate, seed }).map_err(|e| e.to_string())?;
            }
            Ok(ex)
        });
        let ex = ex.map_err(PyValueError::new_err)?;
        Ok((
            ex.iter().map(|e| (e.review_id.clone(), e.candidate_id.clone())).collect(),
            ex.iter().map(|e| e.features.to_array().to_vec()).collect(),
            ex.iter().map(|e| (e.participated, e.comment_count, e.log_feedback)).collect(),
        ))
    }
}

#[pyfunction]
fn load_corpus(dir: PathBuf) -> PyResult<Corpus> {
    load_corpus_dir(&dir).map(Corpus).map_err(|e| match e {
        revsignal::corpus::CorpusError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => value_err(e),
    })
}

/// Writes a synthetic corpus with its ground truth to `out_dir`.
///
/// `config` is a JSON object overriding fields of the preset.
#[pyfunction]
#[pyo3(signature = (out_dir, preset = "planted", seed = None, config = None))]
fn synth<'py>(
    py: Python<'py>,
    out_dir: PathBuf,
    preset: &str,
    seed: Option<u64>,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let base = match preset {
        "planted" => SynthConfig::planted(),
        "stationary" => SynthConfig::stationary(),
        "constant" => SynthConfig::constant(-2.0),
        _ => return Err(PyValueError::new_err(format!("unknown preset {preset:?}"))),
    };
    let mut cfg = match config {
        Some(text) => {
            let mut v = serde_json::to_value(&base).map_err(value_err)?;
            let patch: serde_json::Value = serde_json::from_str(text).map_err(value_err)?;
            let (Some(obj), Some(p)) = (v.as_object_mut(), patch.as_object()) else {
                return Err(PyValueError::new_err("config must be a JSON object"));
            };
            obj.extend(p.clone());
            serde_json::from_value(v).map_err(value_err)?
        }
        None => base,
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (corpus, truth) = py.detach(|| generate(&cfg)).map_err(PyValueError::new_err)?;
    write_synth(&out_dir, &cfg, &corpus, &truth).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let d = PyDict::new(py);
    d.set_item("n_reviews", corpus.reviews().len())?;
    d.set_item("n_pairs", truth.pairs.len())?;
    d.set_item("bayes_auprc", opt(truth.bayes_auprc))?;
    Ok(d)
}

/// A fitted model.
#[pyclass(frozen, module = "revsignal")]
struct Model(TrainedModel);

#[pymethods]
impl Model {
    #[getter]
    fn family(&self) -> &'static str {
        self.0.spec.algorithm.family().name()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.0.columns.clone()
    }

    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = matrix(&rows, &self.0.columns)?;
        if self.0.is_classifier() {
            self.0.predict_scores(&x)
        } else {
            self.0.predict_values(&x)
        }
        .map_err(value_err)
    }

    fn to_json(&self) -> String {
        model_to_json(&self.0)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        model_from_json(text).map(Model).map_err(value_err)
    }
}

fn matrix(rows: &[Vec<f64>], columns: &[String]) -> PyResult<Matrix> {
    if rows.is_empty() {
        return Matrix::new(0, columns.len(), Vec::new(), columns.to_vec()).map_err(value_err);
    }
    Matrix::from_rows(rows, columns.to_vec()).map_err(value_err)
}

/// Fits `family` on `rows` (columns named by `columns`, every feature by
/// default). Classifiers take 0/1 targets.
#[pyfunction]
#[pyo3(signature = (family, rows, y, columns = None, params = None, seed = 0))]
fn train(
    py: Python<'_>,
    family: &str,
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
    columns: Option<Vec<String>>,
    params: Option<BTreeMap<String, f64>>,
    seed: u64,
) -> PyResult<Model> {
    let family: Family = family.parse().map_err(value_err)?;
    let columns = columns.unwrap_or_else(|| FEATURE_NAMES.iter().map(|s| s.to_string()).collect());
    let x = matrix(&rows, &columns)?;
    let alg = Algorithm::from_params(family, &params.unwrap_or_default()).map_err(value_err)?;
    py.detach(|| revsignal::learners::train(&ModelSpec::new(alg, seed), &x, &y))
        .map(Model)
        .map_err(value_err)
}

#[pyfunction]
fn classification_report<'py>(
    py: Python<'py>,
    labels: Vec<bool>,
    predictions: Vec<bool>,
    scores: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = revsignal::metrics::classification_report(&labels, &predictions, &scores).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("tp", r.tp)?;
    d.set_item("fp", r.fp)?;
    d.set_item("tn", r.tn)?;
    d.set_item("fn", r.fn_)?;
    d.set_item("precision", opt(r.precision))?;
    d.set_item("recall", opt(r.recall))?;
    d.set_item("f1", opt(r.f1))?;
    d.set_item("auprc", opt(r.auprc))?;
    Ok(d)
}

#[pyfunction]
fn regression_report<'py>(py: Python<'py>, targets: Vec<f64>, predictions: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = revsignal::metrics::regression_report(&targets, &predictions).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("rmse", r.rmse)?;
    d.set_item("pearson_r", opt(r.pearson_r))?;
    d.set_item("r2", opt(r.r2))?;
    Ok(d)
}

#[pyfunction]
fn average_precision(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<Option<f64>> {
    revsignal::metrics::average_precision(&labels, &scores)
        .map(opt)
        .map_err(value_err)
}

#[pyfunction]
fn log_feedback(comment_count: u32) -> f64 {
    revsignal::examples::log_feedback(comment_count)
}

#[pyfunction]
fn undersample_count(n_negatives: usize, rate: f64) -> usize {
    revsignal::examples::undersample_count(n_negatives, rate)
}

/// Runs one experiment stage ("rq1", "rq2" or "rq3") and writes its
/// reports to `out_dir`, reusing earlier stages' reports found there.
/// Returns the text table.
#[pyfunction]
#[pyo3(signature = (stage, corpus, out_dir, plan = None, jobs = 0))]
fn run_stage(
    py: Python<'_>,
    stage: &str,
    corpus: &Corpus,
    out_dir: PathBuf,
    plan: Option<&str>,
    jobs: usize,
) -> PyResult<String> {
    let plan: ExperimentPlan = match plan {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => ExperimentPlan::default(),
    };
    py.detach(|| -> Result<String, revsignal::runner::RunnerError> {
        let p = prepare(&corpus.0, &plan)?;
        let rq1_path = out_dir.join("rq1.json");
        let rq2_path = out_dir.join("rq2.json");
        let rq1 = rq1_path.exists().then(|| ExperimentReport::load_json(&rq1_path)).transpose()?;
        match stage {
            "rq1" => {
                let (r, _) = run_rq1(&p, &plan, jobs)?;
                r.write(&out_dir, "rq1")?;
                Ok(r.to_text())
            }
            "rq2" => {
                let r = run_rq2(&p, &plan, rq1.as_ref(), jobs)?;
                r.write(&out_dir, "rq2")?;
                Ok(r.to_text())
            }
            "rq3" => {
                let rq2 = rq2_path.exists().then(|| Rq2Report::load_json(&rq2_path)).transpose()?;
                let (r, _) = run_rq3(&p, &plan, rq1.as_ref(), rq2.as_ref(), jobs)?;
                r.write(&out_dir, "rq3")?;
                Ok(r.to_text())
            }
            _ => Err(revsignal::runner::RunnerError::Plan(format!("unknown stage {stage:?}"))),
        }
    })
    .map_err(value_err)
}

#[pymodule]
#[pyo3(name = "revsignal")]
fn revsignal_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FEATURE_NAMES", FEATURE_NAMES.to_vec())?;
    m.add_class::<Corpus>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(classification_report, m)?)?;
    m.add_function(wrap_pyfunction!(regression_report, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(log_feedback, m)?)?;
    m.add_function(wrap_pyfunction!(undersample_count, m)?)?;
    m.add_function(wrap_pyfunction!(run_stage, m)?)?;
    Ok(())
}
