use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LearnError, TrainedModel};

pub const FORMAT_NAME: &str = "revsignal-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: TrainedModel,
}

pub fn model_to_json(model: &TrainedModel) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        format: &'a str,
        version: u32,
        model: &'a TrainedModel,
    }
    serde_json::to_string(&Out {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        model,
    })
    .expect("models always serialize")
}

pub fn model_from_json(s: &str) -> Result<TrainedModel, LearnError> {
    let env: Envelope = serde_json::from_str(s).map_err(|e| LearnError::Format(e.to_string()))?;
    if env.format != FORMAT_NAME {
        return Err(LearnError::Format(format!("unexpected format {:?}", env.format)));
    }
    if env.version != FORMAT_VERSION {
        return Err(LearnError::Format(format!("unsupported version {}", env.version)));
    }
    Ok(env.model)
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), LearnError> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, LearnError> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_json(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, Algorithm, ForestParams, Matrix, ModelSpec};

    #[test]
    fn round_trip_every_family() {
        let x = Matrix::from_rows(
            &[vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, 0.0], vec![3.0, 2.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let labels = [0.0, 0.0, 1.0, 1.0];
        let fp = ForestParams {
            n_trees: 3,
            max_depth: Some(3),
            min_leaf: 1,
        };
        for alg in [
            Algorithm::LogisticRegression { lambda: 0.1 },
            Algorithm::LinearSvc { c: 1.0 },
            Algorithm::RandomForestClf(fp),
            Algorithm::RandomForestReg(fp),
            Algorithm::KnnReg { k: 2 },
            Algorithm::LinearReg,
        ] {
            let m = train(&ModelSpec::new(alg, 4), &x, &labels).unwrap();
            let back = model_from_json(&model_to_json(&m)).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn rejects_other_versions() {
        let s = r#"{"format":"revsignal-model","version":99,"model":null}"#;
        assert!(model_from_json(s).is_err());
    }
}
