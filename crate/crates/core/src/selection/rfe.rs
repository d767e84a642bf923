//! Recursive feature elimination scored on expanding temporal folds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SelectionError;
use crate::corpus::Timestamp;
use crate::learners::{
    default_grid, grid_search, train, validation_score, Algorithm, Family, ForestParams, LearnError, Matrix,
    ModelSpec, Scoring,
};
use crate::metrics::Metric;

pub const TIE_TOLERANCE: f64 = 1e-9;

/// Row indices of one temporal fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Splits `[start, end)` into `n_folds + 1` equal blocks; fold `k` trains on
/// blocks `0..=k` and validates on block `k + 1`.
pub fn temporal_folds(times: &[Timestamp], start: Timestamp, end: Timestamp, n_folds: usize) -> Vec<Fold> {
    let blocks = n_folds as i64 + 1;
    let width = (end - start) as f64 / blocks as f64;
    let block_of = |t: Timestamp| -> Option<usize> {
        if t < start || t >= end {
            return None;
        }
        Some((((t - start) as f64 / width).floor() as usize).min(n_folds))
    };
    let blocks_of: Vec<Option<usize>> = times.iter().map(|&t| block_of(t)).collect();
    (0..n_folds)
        .map(|k| Fold {
            train: (0..times.len()).filter(|&i| blocks_of[i].is_some_and(|b| b <= k)).collect(),
            validation: (0..times.len()).filter(|&i| blocks_of[i] == Some(k + 1)).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeConfig {
    pub family: Family,
    pub grid: Vec<Algorithm>,
    pub scoring: Scoring,
    pub seed: u64,
}

impl RfeConfig {
    pub fn new(family: Family, seed: u64) -> Self {
        Self {
            family,
            grid: default_grid(family),
            scoring: Scoring::for_family(family),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeStep {
    pub features: Vec<String>,
    pub fold_scores: Vec<Metric>,
    /// Mean over folds, undefined scores counted as 0.
    pub mean_score: f64,
    /// Feature removed after this step, if any.
    pub eliminated: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    pub selected: Vec<String>,
    pub eliminated: Vec<String>,
    pub steps: Vec<RfeStep>,
    pub winning_score: f64,
    pub spec: ModelSpec,
}

struct FoldData {
    train_x: Matrix,
    train_y: Vec<f64>,
    valid_x: Matrix,
    valid_y: Vec<f64>,
}

fn gather(y: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| y[i]).collect()
}

/// Fold score and per-column importance of `spec` on the columns `cols`.
fn evaluate_fold(
    fold: &FoldData,
    cols: &[usize],
    spec: &ModelSpec,
    scoring: Scoring,
) -> Result<(Metric, Vec<f64>), LearnError> {
    let tx = fold.train_x.select_columns(cols);
    let vx = fold.valid_x.select_columns(cols);
    let model = train(spec, &tx, &fold.train_y)?;
    let score = validation_score(&model, &vx, &fold.valid_y, scoring)?;
    let imp = match model.feature_importance() {
        Some(imp) => imp,
        None => {
            // kNN has no importance; rank with a forest regressor instead
            let fallback = ModelSpec::new(Algorithm::RandomForestReg(ForestParams::default()), spec.seed);
            train(&fallback, &tx, &fold.train_y)?
                .feature_importance()
                .expect("forests have importances")
        }
    };
    Ok((score, imp))
}

/// Backward elimination over the columns of `x`.
///
/// Hyperparameters are chosen once by grid search on the last fold with
/// every column. Each step then trains on every fold, drops the column with
/// the lowest mean importance (ties drop the later column) and records the
/// mean validation score. The selected set is the step with the best score,
/// preferring more columns within [`TIE_TOLERANCE`].
pub fn rfe(x: &Matrix, y: &[f64], folds: &[Fold], cfg: &RfeConfig) -> Result<RfeResult, SelectionError> {
    if folds.len() < 2 {
        return Err(SelectionError::InsufficientFolds(folds.len()));
    }
    if x.cols() < 2 {
        return Err(SelectionError::TooFewFeatures(x.cols()));
    }
    if let Some(f) = folds.iter().position(|f| f.train.is_empty() || f.validation.is_empty()) {
        return Err(SelectionError::EmptyFold(f));
    }
    let data: Vec<FoldData> = folds
        .iter()
        .map(|f| FoldData {
            train_x: x.select_rows(&f.train),
            train_y: gather(y, &f.train),
            valid_x: x.select_rows(&f.validation),
            valid_y: gather(y, &f.validation),
        })
        .collect();
    let last = data.last().expect("at least two folds");
    let spec = grid_search(
        &cfg.grid,
        cfg.seed,
        (&last.train_x, &last.train_y),
        (&last.valid_x, &last.valid_y),
        cfg.scoring,
    )?
    .best;

    let mut cols: Vec<usize> = (0..x.cols()).collect();
    let mut steps = Vec::with_capacity(x.cols());
    loop {
        let results: Vec<Result<(Metric, Vec<f64>), LearnError>> = data
            .par_iter()
            .map(|f| evaluate_fold(f, &cols, &spec, cfg.scoring))
            .collect();
        let mut fold_scores = Vec::with_capacity(data.len());
        let mut importance = vec![0.0; cols.len()];
        for r in results {
            let (score, imp) = r?;
            fold_scores.push(score);
            for (a, v) in importance.iter_mut().zip(imp) {
                *a += v / data.len() as f64;
            }
        }
        let mean_score = fold_scores.iter().map(|m| m.or(0.0)).sum::<f64>() / fold_scores.len() as f64;
        let features: Vec<String> = cols.iter().map(|&j| x.names()[j].clone()).collect();
        if cols.len() == 1 {
            steps.push(RfeStep {
                features,
                fold_scores,
                mean_score,
                eliminated: None,
            });
            break;
        }
        // lowest importance; among equals the later column
        let lowest = importance.iter().copied().fold(f64::INFINITY, f64::min);
        let drop = (0..cols.len())
            .rev()
            .find(|&i| importance[i] == lowest)
            .expect("non-empty");
        steps.push(RfeStep {
            features,
            fold_scores,
            mean_score,
            eliminated: Some(x.names()[cols[drop]].clone()),
        });
        cols.remove(drop);
    }

    let top = steps.iter().map(|s| s.mean_score).fold(f64::NEG_INFINITY, f64::max);
    let best = steps
        .iter()
        .position(|s| s.mean_score >= top - TIE_TOLERANCE)
        .expect("at least one step");
    Ok(RfeResult {
        selected: steps[best].features.clone(),
        eliminated: steps[..best]
            .iter()
            .filter_map(|s| s.eliminated.clone())
            .collect(),
        winning_score: steps[best].mean_score,
        steps,
        spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_expand() {
        let times: Vec<i64> = (0..30).collect();
        let f = temporal_folds(&times, 0, 30, 2);
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].train, (0..10).collect::<Vec<_>>());
        assert_eq!(f[0].validation, (10..20).collect::<Vec<_>>());
        assert_eq!(f[1].train, (0..20).collect::<Vec<_>>());
        assert_eq!(f[1].validation, (20..30).collect::<Vec<_>>());
    }

    #[test]
    fn needs_two_folds() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0]], vec!["a".into(), "b".into()]).unwrap();
        let folds = vec![Fold {
            train: vec![0],
            validation: vec![0],
        }];
        let cfg = RfeConfig::new(Family::LinearReg, 0);
        assert!(matches!(
            rfe(&x, &[0.0], &folds, &cfg),
            Err(SelectionError::InsufficientFolds(1))
        ));
    }

    #[test]
    fn copied_label_survives() {
        let n = 300;
        let times: Vec<i64> = (0..n as i64).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let h = |s: usize| (((i * 2654435761 + s * 40503) % 1000) as f64) / 1000.0;
                vec![h(1), (i % 2) as f64, h(2), h(3)]
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let x = Matrix::from_rows(&rows, vec!["n1".into(), "label".into(), "n2".into(), "n3".into()]).unwrap();
        let folds = temporal_folds(&times, 0, n as i64, 3);
        let r = rfe(&x, &y, &folds, &RfeConfig::new(Family::LinearReg, 0)).unwrap();
        assert!(r.selected.contains(&"label".to_string()));
        assert_eq!(r.steps.len(), 4);
        assert_eq!(r.steps.last().unwrap().features, ["label"]);
    }
}
