use serde::{Deserialize, Serialize};

use super::{train, Algorithm, Family, ForestParams, LearnError, Matrix, ModelSpec, TrainedModel};
use crate::metrics::{classification_report, regression_report, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    F1,
    R2,
}

impl Scoring {
    pub fn for_family(f: Family) -> Self {
        if f.is_classifier() {
            Scoring::F1
        } else {
            Scoring::R2
        }
    }
}

/// Default hyperparameter grid, simplest model first.
pub fn default_grid(family: Family) -> Vec<Algorithm> {
    match family {
        Family::LogisticRegression => [1.0, 1e-1, 1e-2, 1e-3, 1e-4]
            .into_iter()
            .map(|lambda| Algorithm::LogisticRegression { lambda })
            .collect(),
        Family::LinearSvc => [0.01, 0.1, 1.0, 10.0]
            .into_iter()
            .map(|c| Algorithm::LinearSvc { c })
            .collect(),
        Family::KnnReg => [21, 11, 5, 3].into_iter().map(|k| Algorithm::KnnReg { k }).collect(),
        Family::LinearReg => vec![Algorithm::LinearReg],
        Family::RandomForestClf | Family::RandomForestReg => {
            let mut out = Vec::new();
            for max_depth in [Some(10), Some(20), None] {
                for min_leaf in [5, 1] {
                    let p = ForestParams {
                        n_trees: 100,
                        max_depth,
                        min_leaf,
                    };
                    out.push(if family == Family::RandomForestClf {
                        Algorithm::RandomForestClf(p)
                    } else {
                        Algorithm::RandomForestReg(p)
                    });
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub algorithm: Algorithm,
    /// `None` when training failed.
    pub score: Option<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ModelSpec,
    pub best_score: Metric,
    pub cells: Vec<GridCell>,
}

/// F1 at threshold 0.5 or R² of a fitted model on held-out rows.
pub fn validation_score(
    model: &TrainedModel,
    valid_x: &Matrix,
    valid_y: &[f64],
    scoring: Scoring,
) -> Result<Metric, LearnError> {
    let metric = match scoring {
        Scoring::F1 => {
            let scores = model.predict_scores(valid_x)?;
            let labels: Vec<bool> = valid_y.iter().map(|&v| v > 0.5).collect();
            let preds: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
            classification_report(&labels, &preds, &scores)
                .map(|r| r.f1)
                .unwrap_or(Metric::Undefined)
        }
        Scoring::R2 => {
            let preds = model.predict_values(valid_x)?;
            regression_report(valid_y, &preds)
                .map(|r| r.r2)
                .unwrap_or(Metric::Undefined)
        }
    };
    Ok(metric)
}

fn score_model(
    spec: &ModelSpec,
    train_x: &Matrix,
    train_y: &[f64],
    valid_x: &Matrix,
    valid_y: &[f64],
    scoring: Scoring,
) -> Result<Metric, LearnError> {
    validation_score(&train(spec, train_x, train_y)?, valid_x, valid_y, scoring)
}

/// Picks the cell with the best validation score.
///
/// An undefined F1 ranks as 0 and an undefined R² below every defined value.
/// Ties keep the earlier cell; failed cells are skipped.
pub fn grid_search(
    grid: &[Algorithm],
    seed: u64,
    train: (&Matrix, &[f64]),
    validation: (&Matrix, &[f64]),
    scoring: Scoring,
) -> Result<GridResult, LearnError> {
    let rank = |m: Metric| match (scoring, m) {
        (_, Metric::Defined(v)) => v,
        (Scoring::F1, Metric::Undefined) => 0.0,
        (Scoring::R2, Metric::Undefined) => f64::NEG_INFINITY,
    };
    let mut cells = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, usize, Metric)> = None;
    for (i, alg) in grid.iter().enumerate() {
        let spec = ModelSpec::new(*alg, seed);
        let score = match score_model(&spec, train.0, train.1, validation.0, validation.1, scoring) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("grid cell {} failed: {e}", alg.describe());
                None
            }
        };
        if let Some(m) = score {
            let r = rank(m);
            if best.is_none_or(|(b, _, _)| r > b) {
                best = Some((r, i, m));
            }
        }
        cells.push(GridCell { algorithm: *alg, score });
    }
    let (_, i, best_score) = best.ok_or(LearnError::AllCellsFailed)?;
    Ok(GridResult {
        best: ModelSpec::new(grid[i], seed),
        best_score,
        cells,
    })
}
