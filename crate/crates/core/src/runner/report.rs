use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::examples::Task;
use crate::learners::Family;
use crate::metrics::Metric;
use crate::selection::{ImportanceReport, RfeResult};

/// One configuration of an experiment and its test-set metrics.
///
/// Metrics of the other task stay undefined. A failed cell keeps its
/// coordinates and carries the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub task: Task,
    pub feature_set: String,
    pub family: Family,
    pub rate: Option<f64>,
    pub timeframe_months: Option<u32>,
    pub period: Option<usize>,
    pub hyperparameters: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
    pub auprc: Metric,
    pub rmse: Metric,
    pub pearson_r: Metric,
    pub r2: Metric,
    pub error: Option<String>,
}

impl ReportRow {
    pub(crate) fn empty(experiment: &str, task: Task, feature_set: &str, family: Family, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            task,
            feature_set: feature_set.to_string(),
            family,
            rate: None,
            timeframe_months: None,
            period: None,
            hyperparameters: String::new(),
            seed,
            n_train: 0,
            n_test: 0,
            precision: Metric::Undefined,
            recall: Metric::Undefined,
            f1: Metric::Undefined,
            auprc: Metric::Undefined,
            rmse: Metric::Undefined,
            pearson_r: Metric::Undefined,
            r2: Metric::Undefined,
            error: None,
        }
    }

    /// F1 for participation rows, R² for feedback rows.
    pub fn headline(&self) -> Metric {
        match self.task {
            Task::Participation => self.f1,
            Task::Feedback => self.r2,
        }
    }

    /// Cell key used in timing files.
    pub fn key(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        format!(
            "{}/{}/{}/{}/{}/{}/{}",
            self.experiment,
            self.task,
            self.feature_set,
            self.family,
            opt(self.rate.map(|r| r.to_string())),
            opt(self.timeframe_months.map(|t| t.to_string())),
            opt(self.period.map(|p| p.to_string())),
        )
    }
}

/// Wall-clock seconds of one cell. Kept out of the report so that reports
/// stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub cell: String,
    pub seconds: f64,
}

/// Writes `<stem>_timings.csv` into `dir`.
pub fn write_timings(dir: impl AsRef<Path>, stem: &str, timings: &[Timing]) -> Result<(), RunnerError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_csv(&dir.join(format!("{stem}_timings.csv")), timings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> RunnerError {
    RunnerError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunnerError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    std::fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), RunnerError> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunnerError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

impl ExperimentReport {
    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, RunnerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| RunnerError::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Writes `<stem>.csv`, `<stem>.json` and `<stem>.txt` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(), RunnerError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_csv(&dir.join(format!("{stem}.csv")), &self.rows)?;
        write_json(&dir.join(format!("{stem}.json")), self)?;
        write_text(&dir.join(format!("{stem}.txt")), &self.to_text())
    }

    /// Aligned text: participation and feedback sweeps per rate, and
    /// timeframe × period grids for timeframe rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let f = |m: Metric| format!("{m:.3}");
        let sweep: Vec<&ReportRow> = self.rows.iter().filter(|r| r.timeframe_months.is_none()).collect();
        let rates: BTreeSet<u64> = sweep
            .iter()
            .filter(|r| r.task == Task::Participation)
            .filter_map(|r| r.rate.map(f64::to_bits))
            .collect();
        let mut rates: Vec<f64> = rates.into_iter().map(f64::from_bits).collect();
        rates.sort_by(f64::total_cmp);
        for rate in rates {
            let rows: Vec<Vec<String>> = sweep
                .iter()
                .filter(|r| r.task == Task::Participation && r.rate == Some(rate))
                .map(|r| {
                    vec![
                        r.feature_set.clone(),
                        r.family.to_string(),
                        f(r.precision),
                        f(r.recall),
                        f(r.f1),
                        f(r.auprc),
                    ]
                })
                .collect();
            let _ = writeln!(out, "participation, undersampling rate {}%", rate * 100.0);
            out += &render_table(&["features", "algorithm", "Pr", "Re", "F1", "AUPRC"], &rows);
            out.push('\n');
        }
        let rows: Vec<Vec<String>> = sweep
            .iter()
            .filter(|r| r.task == Task::Feedback)
            .map(|r| vec![r.feature_set.clone(), r.family.to_string(), f(r.rmse), f(r.pearson_r), f(r.r2)])
            .collect();
        if !rows.is_empty() {
            out += "feedback\n";
            out += &render_table(&["features", "algorithm", "RMSE", "r", "R2"], &rows);
            out.push('\n');
        }

        let grid: Vec<&ReportRow> = self.rows.iter().filter(|r| r.timeframe_months.is_some()).collect();
        for task in [Task::Participation, Task::Feedback] {
            let rows: Vec<&&ReportRow> = grid.iter().filter(|r| r.task == task).collect();
            if rows.is_empty() {
                continue;
            }
            let periods: BTreeSet<usize> = rows.iter().filter_map(|r| r.period).collect();
            let tfs: BTreeSet<u32> = rows.iter().filter_map(|r| r.timeframe_months).collect();
            let metrics: [(&str, fn(&ReportRow) -> Metric); 2] = match task {
                Task::Participation => [("F1", |r| r.f1), ("AUPRC", |r| r.auprc)],
                Task::Feedback => [("R2", |r| r.r2), ("RMSE", |r| r.rmse)],
            };
            for (name, get) in metrics {
                let mut headers = vec!["timeframe".to_string()];
                headers.extend(periods.iter().map(|p| format!("P{}", p + 1)));
                let table: Vec<Vec<String>> = tfs
                    .iter()
                    .map(|&tf| {
                        let mut line = vec![format!("{tf} months")];
                        for &p in &periods {
                            let cell = rows
                                .iter()
                                .find(|r| r.timeframe_months == Some(tf) && r.period == Some(p))
                                .map_or("-".to_string(), |r| f(get(r)));
                            line.push(cell);
                        }
                        line
                    })
                    .collect();
                let _ = writeln!(out, "{task} {name} by timeframe and period");
                let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
                out += &render_table(&headers, &table);
                out.push('\n');
            }
        }
        let failed: Vec<&ReportRow> = self.rows.iter().filter(|r| r.error.is_some()).collect();
        for r in failed {
            let _ = writeln!(out, "failed {}: {}", r.key(), r.error.as_deref().unwrap_or_default());
        }
        out
    }
}

/// Aligned plain-text table; the first column is left-aligned.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let n = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, c) in cells.enumerate().take(n) {
            if i == 0 {
                let _ = write!(s, "{c:<w$}", w = widths[0]);
            } else {
                let _ = write!(s, "  {c:>w$}", w = widths[i]);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&mut headers.iter().copied());
    out += &line(&mut widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str));
    for r in rows {
        out += &line(&mut r.iter().map(String::as_str));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2TaskResult {
    pub task: Task,
    pub family: Family,
    pub rate: Option<f64>,
    /// "rq1" or "override".
    pub source: String,
    pub rfe: RfeResult,
    pub importance: ImportanceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2Report {
    pub results: Vec<Rq2TaskResult>,
}

impl Rq2Report {
    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, RunnerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| RunnerError::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn selected(&self, task: Task) -> Option<&[String]> {
        self.results
            .iter()
            .find(|r| r.task == task)
            .map(|r| r.rfe.selected.as_slice())
    }

    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(), RunnerError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_json(&dir.join(format!("{stem}.json")), self)?;
        write_text(&dir.join(format!("{stem}.txt")), &self.to_text())
    }

    /// Importance table with one row per feature and one column per
    /// measure, followed by the elimination steps.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let f = |m: Metric| format!("{m:.3}");
            let _ = writeln!(
                out,
                "{} ({}{}, from {})",
                r.task,
                r.family,
                r.rate.map_or(String::new(), |x| format!(", rate {x}")),
                r.source
            );
            let rows: Vec<Vec<String>> = r
                .importance
                .rows
                .iter()
                .map(|i| {
                    vec![
                        i.feature.clone(),
                        f(i.information_gain),
                        f(i.gini_importance),
                        f(i.gain_ratio),
                        f(i.chi_squared),
                        f(i.rrelieff),
                    ]
                })
                .collect();
            out += &render_table(&["feature", "IG", "Gini", "GR", "Chi2", "RReliefF"], &rows);
            out.push('\n');
            let steps: Vec<Vec<String>> = r
                .rfe
                .steps
                .iter()
                .map(|s| {
                    vec![
                        s.features.len().to_string(),
                        format!("{:.4}", s.mean_score),
                        s.eliminated.clone().unwrap_or_else(|| "-".into()),
                    ]
                })
                .collect();
            out += &render_table(&["features", "mean score", "eliminated next"], &steps);
            let _ = writeln!(out, "selected: {}\n", r.rfe.selected.join(", "));
        }
        out
    }
}
