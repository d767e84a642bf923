use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::examples::TrainingExample;
use crate::features::FeatureSelector;

/// Dense row-major design matrix with column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    names: Vec<String>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, names: Vec<String>) -> Result<Self, LearnError> {
        if data.len() != rows * cols || names.len() != cols {
            return Err(LearnError::Shape(format!(
                "{rows}x{cols} with {} values and {} names",
                data.len(),
                names.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite);
        }
        Ok(Self {
            rows,
            cols,
            data,
            names,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], names: Vec<String>) -> Result<Self, LearnError> {
        let cols = names.len();
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(LearnError::Shape(format!("row of {} values, {cols} columns", r.len())));
        }
        Self::new(rows.len(), cols, rows.concat(), names)
    }

    /// Selected feature columns of each example.
    pub fn from_examples(examples: &[TrainingExample], selector: &FeatureSelector) -> Self {
        let idx = selector.indices();
        let mut data = Vec::with_capacity(examples.len() * idx.len());
        for e in examples {
            let a = e.features.to_array();
            data.extend(idx.iter().map(|&i| a[i]));
        }
        Self {
            rows: examples.len(),
            cols: idx.len(),
            data,
            names: selector.names().into_iter().map(String::from).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j]));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            data,
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            data,
            names: self.names.clone(),
        }
    }
}

pub fn participation_labels(examples: &[TrainingExample]) -> Vec<f64> {
    examples.iter().map(|e| if e.participated { 1.0 } else { 0.0 }).collect()
}

pub fn feedback_targets(examples: &[TrainingExample]) -> Vec<f64> {
    examples.iter().map(|e| e.log_feedback).collect()
}

/// Per-column mean and population standard deviation.
///
/// Constant columns get a scale of 1 so they map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            row.iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .map(|((v, m), s)| (v - m) / s),
        );
    }

    /// Standardized copy as flat row-major data.
    pub fn transform(&self, x: &Matrix) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.rows() * x.cols());
        let mut buf = Vec::with_capacity(x.cols());
        for i in 0..x.rows() {
            self.transform_row(x.row(i), &mut buf);
            out.extend_from_slice(&buf);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Matrix::new(2, 2, vec![1.0; 3], vec!["a".into(), "b".into()]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::NAN], vec!["a".into()]).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(m.column(1), vec![2.0, 4.0]);
        assert_eq!(m.select_columns(&[1]).names(), ["b"]);
        assert_eq!(m.select_rows(&[1]).row(0), [3.0, 4.0]);
    }

    #[test]
    fn standardizer_constant_column() {
        let m = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]], vec!["a".into(), "b".into()]).unwrap();
        let s = Standardizer::fit(&m);
        assert_eq!(s.transform(&m), vec![-1.0, 0.0, 1.0, 0.0]);
    }
}
