//! The six learners: logistic regression, linear SVC and random forest for
//! participation, kNN, least squares and random forest for feedback.

mod forest;
mod grid;
mod knn;
mod linear;
mod matrix;
mod ols;
mod persist;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{Forest, ForestParams, Node, Tree};
pub use grid::{default_grid, grid_search, validation_score, GridCell, GridResult, Scoring};
pub use knn::KnnModel;
pub use linear::{hinge_objective, logistic_objective, sigmoid, LinearModel, Objective, GRAD_TOL, MAX_ITER};
pub use matrix::{feedback_targets, participation_labels, Matrix, Standardizer};
pub use ols::{OlsModel, RIDGE_FALLBACK};
pub use persist::{load_model, model_from_json, model_to_json, save_model, FORMAT_NAME, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("training labels contain a single class")]
    SingleClassTraining,
    #[error("{0} labels for {1} rows")]
    LengthMismatch(usize, usize),
    #[error("columns {found:?} do not match training columns {expected:?}")]
    SchemaMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("unknown model family {0:?}")]
    UnknownFamily(String),
    #[error("{0} model cannot produce {1}")]
    WrongTask(&'static str, &'static str),
    #[error("matrix shape: {0}")]
    Shape(String),
    #[error("non-finite value in matrix")]
    NonFinite,
    #[error("every grid cell failed")]
    AllCellsFailed,
    #[error("model file: {0}")]
    Format(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LogisticRegression,
    LinearSvc,
    RandomForestClf,
    KnnReg,
    LinearReg,
    RandomForestReg,
}

impl Family {
    pub const CLASSIFIERS: [Family; 3] = [Family::LinearSvc, Family::LogisticRegression, Family::RandomForestClf];
    pub const REGRESSORS: [Family; 3] = [Family::KnnReg, Family::LinearReg, Family::RandomForestReg];

    pub fn name(self) -> &'static str {
        match self {
            Family::LogisticRegression => "logistic_regression",
            Family::LinearSvc => "linear_svc",
            Family::RandomForestClf => "random_forest_clf",
            Family::KnnReg => "knn_reg",
            Family::LinearReg => "linear_reg",
            Family::RandomForestReg => "random_forest_reg",
        }
    }

    pub fn is_classifier(self) -> bool {
        matches!(
            self,
            Family::LogisticRegression | Family::LinearSvc | Family::RandomForestClf
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::CLASSIFIERS
            .into_iter()
            .chain(Family::REGRESSORS)
            .find(|f| f.name() == s)
            .ok_or_else(|| LearnError::UnknownFamily(s.to_string()))
    }
}

/// A model family together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Algorithm {
    LogisticRegression { lambda: f64 },
    LinearSvc { c: f64 },
    RandomForestClf(ForestParams),
    KnnReg { k: usize },
    LinearReg,
    RandomForestReg(ForestParams),
}

impl Algorithm {
    pub fn family(&self) -> Family {
        match self {
            Algorithm::LogisticRegression { .. } => Family::LogisticRegression,
            Algorithm::LinearSvc { .. } => Family::LinearSvc,
            Algorithm::RandomForestClf(_) => Family::RandomForestClf,
            Algorithm::KnnReg { .. } => Family::KnnReg,
            Algorithm::LinearReg => Family::LinearReg,
            Algorithm::RandomForestReg(_) => Family::RandomForestReg,
        }
    }

    /// Builds an algorithm from a name → value map, rejecting names that do
    /// not belong to the family. Missing names take defaults.
    pub fn from_params(family: Family, params: &BTreeMap<String, f64>) -> Result<Self, LearnError> {
        let allowed: &[&str] = match family {
            Family::LogisticRegression => &["lambda"],
            Family::LinearSvc => &["c"],
            Family::RandomForestClf | Family::RandomForestReg => &["n_trees", "max_depth", "min_leaf"],
            Family::KnnReg => &["k"],
            Family::LinearReg => &[],
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(LearnError::BadHyperparameter(format!("{bad} for {family}")));
        }
        let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
        let positive = |k: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(LearnError::BadHyperparameter(format!("{k}={v}")))
            }
        };
        let count = |k: &str, default: f64| -> Result<usize, LearnError> {
            let v = positive(k, get(k, default))?;
            if v.fract() != 0.0 {
                return Err(LearnError::BadHyperparameter(format!("{k}={v}")));
            }
            Ok(v as usize)
        };
        Ok(match family {
            Family::LogisticRegression => Algorithm::LogisticRegression {
                lambda: {
                    let l = get("lambda", 1e-2);
                    if l >= 0.0 && l.is_finite() {
                        l
                    } else {
                        return Err(LearnError::BadHyperparameter(format!("lambda={l}")));
                    }
                },
            },
            Family::LinearSvc => Algorithm::LinearSvc {
                c: positive("c", get("c", 1.0))?,
            },
            Family::KnnReg => Algorithm::KnnReg { k: count("k", 5.0)? },
            Family::LinearReg => Algorithm::LinearReg,
            Family::RandomForestClf | Family::RandomForestReg => {
                let fp = ForestParams {
                    n_trees: count("n_trees", 100.0)?,
                    max_depth: match params.get("max_depth") {
                        None => None,
                        Some(&d) if d.is_infinite() || d < 0.0 => None,
                        Some(&d) if d.fract() == 0.0 => Some(d as usize),
                        Some(&d) => return Err(LearnError::BadHyperparameter(format!("max_depth={d}"))),
                    },
                    min_leaf: count("min_leaf", 1.0)?,
                };
                if family == Family::RandomForestClf {
                    Algorithm::RandomForestClf(fp)
                } else {
                    Algorithm::RandomForestReg(fp)
                }
            }
        })
    }

    /// Hyperparameters as `name=value` pairs, for reports.
    pub fn describe(&self) -> String {
        match self {
            Algorithm::LogisticRegression { lambda } => format!("lambda={lambda}"),
            Algorithm::LinearSvc { c } => format!("c={c}"),
            Algorithm::KnnReg { k } => format!("k={k}"),
            Algorithm::LinearReg => String::new(),
            Algorithm::RandomForestClf(p) | Algorithm::RandomForestReg(p) => format!(
                "n_trees={} max_depth={} min_leaf={}",
                p.n_trees,
                p.max_depth.map_or("none".to_string(), |d| d.to_string()),
                p.min_leaf
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self { algorithm, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainWarning {
    NonConvergence { iterations: usize },
    SingularSystem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Params {
    Linear(LinearModel),
    Forest(Forest),
    Knn(KnnModel),
    Ols(OlsModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub columns: Vec<String>,
    pub params: Params,
    #[serde(default)]
    pub warnings: Vec<TrainWarning>,
}

/// Fits `spec` on `x`; classifiers expect labels in {0, 1}.
pub fn train(spec: &ModelSpec, x: &Matrix, y: &[f64]) -> Result<TrainedModel, LearnError> {
    if x.rows() == 0 {
        return Err(LearnError::EmptyTraining);
    }
    if y.len() != x.rows() {
        return Err(LearnError::LengthMismatch(y.len(), x.rows()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite);
    }
    let family = spec.algorithm.family();
    if family.is_classifier() {
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(LearnError::BadHyperparameter("classification labels must be 0 or 1".into()));
        }
        if y.iter().all(|&v| v == y[0]) {
            return Err(LearnError::SingleClassTraining);
        }
    }
    let mut warnings = Vec::new();
    let mut nonconv = |it: Option<usize>| {
        if let Some(iterations) = it {
            log::warn!("{family} stopped after {iterations} iterations without converging");
            warnings.push(TrainWarning::NonConvergence { iterations });
        }
    };
    let params = match spec.algorithm {
        Algorithm::LogisticRegression { lambda } => {
            let (m, it) = linear::fit_logistic(x, y, lambda);
            nonconv(it);
            Params::Linear(m)
        }
        Algorithm::LinearSvc { c } => {
            let (m, it) = linear::fit_svc(x, y, c);
            nonconv(it);
            Params::Linear(m)
        }
        Algorithm::RandomForestClf(p) => Params::Forest(forest::fit_forest(x, y, p, true, spec.seed)),
        Algorithm::RandomForestReg(p) => Params::Forest(forest::fit_forest(x, y, p, false, spec.seed)),
        Algorithm::KnnReg { k } => Params::Knn(KnnModel::fit(x, y, k)),
        Algorithm::LinearReg => {
            let (m, ridge) = OlsModel::fit(x, y);
            if ridge {
                log::warn!("singular least-squares system, used ridge {RIDGE_FALLBACK}");
                warnings.push(TrainWarning::SingularSystem);
            }
            Params::Ols(m)
        }
    };
    Ok(TrainedModel {
        spec: *spec,
        columns: x.names().to_vec(),
        params,
        warnings,
    })
}

impl TrainedModel {
    pub fn is_classifier(&self) -> bool {
        self.spec.algorithm.family().is_classifier()
    }

    fn check_schema(&self, x: &Matrix) -> Result<(), LearnError> {
        if x.names() != self.columns.as_slice() {
            return Err(LearnError::SchemaMismatch {
                expected: self.columns.clone(),
                found: x.names().to_vec(),
            });
        }
        Ok(())
    }

    fn raw(&self, x: &Matrix) -> Vec<f64> {
        let mut buf = Vec::new();
        let mut dist = Vec::new();
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                match &self.params {
                    Params::Linear(m) => sigmoid(m.margin(row, &mut buf)),
                    Params::Forest(f) => f.predict(row),
                    Params::Knn(k) => k.predict(row, &mut buf, &mut dist),
                    Params::Ols(o) => o.predict(row),
                }
            })
            .collect()
    }

    /// Positive-class scores in [0, 1].
    pub fn predict_scores(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        if !self.is_classifier() {
            return Err(LearnError::WrongTask(self.spec.algorithm.family().name(), "scores"));
        }
        self.check_schema(x)?;
        Ok(self.raw(x))
    }

    pub fn predict_labels(&self, x: &Matrix, threshold: f64) -> Result<Vec<bool>, LearnError> {
        Ok(self
            .predict_scores(x)?
            .into_iter()
            .map(|s| s >= threshold)
            .collect())
    }

    pub fn predict_values(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        if self.is_classifier() {
            return Err(LearnError::WrongTask(self.spec.algorithm.family().name(), "values"));
        }
        self.check_schema(x)?;
        Ok(self.raw(x))
    }

    /// Per-column importance used for elimination: absolute standardized
    /// weights for linear models, impurity decrease for forests. `None` for
    /// kNN.
    pub fn feature_importance(&self) -> Option<Vec<f64>> {
        match &self.params {
            Params::Linear(m) => Some(m.weights.iter().map(|w| w.abs()).collect()),
            Params::Ols(o) => Some(o.standardized.iter().map(|w| w.abs()).collect()),
            Params::Forest(f) => Some(f.importances.clone()),
            Params::Knn(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec(), vec!["x".into()]).unwrap()
    }

    #[test]
    fn rejects_single_class_and_schema() {
        let spec = ModelSpec::new(Algorithm::LogisticRegression { lambda: 0.1 }, 0);
        assert!(matches!(
            train(&spec, &col(&[1.0, 2.0]), &[1.0, 1.0]),
            Err(LearnError::SingleClassTraining)
        ));
        let m = train(&spec, &col(&[1.0, 2.0]), &[0.0, 1.0]).unwrap();
        let other = Matrix::new(1, 1, vec![1.0], vec!["y".into()]).unwrap();
        assert!(matches!(m.predict_scores(&other), Err(LearnError::SchemaMismatch { .. })));
        assert!(matches!(m.predict_values(&col(&[1.0])), Err(LearnError::WrongTask(..))));
    }

    #[test]
    fn zero_weight_logistic_scores_half() {
        let m = TrainedModel {
            spec: ModelSpec::new(Algorithm::LogisticRegression { lambda: 1.0 }, 0),
            columns: vec!["x".into()],
            params: Params::Linear(LinearModel {
                standardizer: Standardizer {
                    mean: vec![0.0],
                    scale: vec![1.0],
                },
                weights: vec![0.0],
                bias: 0.0,
            }),
            warnings: vec![],
        };
        assert_eq!(m.predict_scores(&col(&[-3.0, 0.0, 9.0])).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn hyperparameter_names_are_checked() {
        let mut p = BTreeMap::new();
        p.insert("k".to_string(), 3.0);
        assert_eq!(Algorithm::from_params(Family::KnnReg, &p).unwrap(), Algorithm::KnnReg { k: 3 });
        assert!(Algorithm::from_params(Family::LinearSvc, &p).is_err());
        p.insert("k".to_string(), 2.5);
        assert!(Algorithm::from_params(Family::KnnReg, &p).is_err());
        let mut f = BTreeMap::new();
        f.insert("max_depth".to_string(), 10.0);
        assert_eq!(
            Algorithm::from_params(Family::RandomForestReg, &f).unwrap(),
            Algorithm::RandomForestReg(ForestParams {
                n_trees: 100,
                max_depth: Some(10),
                min_leaf: 1
            })
        );
    }

    #[test]
    fn spec_json_shape() {
        let s = ModelSpec::new(Algorithm::KnnReg { k: 5 }, 3);
        let j = serde_json::to_value(s).unwrap();
        assert_eq!(j, serde_json::json!({"family": "knn_reg", "k": 5, "seed": 3}));
        let f = ModelSpec::new(Algorithm::RandomForestClf(ForestParams::default()), 1);
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn regression_line() {
        let m = train(
            &ModelSpec::new(Algorithm::LinearReg, 0),
            &col(&[0.0, 1.0, 2.0]),
            &[0.0, 2.0, 4.0],
        )
        .unwrap();
        assert!((m.predict_values(&col(&[3.0])).unwrap()[0] - 6.0).abs() < 1e-9);
    }
}
