use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Standardizer};

/// Stored standardized training set for k-nearest-neighbor regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub standardizer: Standardizer,
    pub cols: usize,
    pub points: Vec<f64>,
    pub targets: Vec<f64>,
}

impl KnnModel {
    pub(crate) fn fit(x: &Matrix, y: &[f64], k: usize) -> Self {
        let standardizer = Standardizer::fit(x);
        Self {
            k: k.max(1),
            points: standardizer.transform(x),
            standardizer,
            cols: x.cols(),
            targets: y.to_vec(),
        }
    }

    /// Mean target of the `k` nearest training points; distance ties go to
    /// the earlier training row.
    pub fn predict(&self, row: &[f64], buf: &mut Vec<f64>, dist: &mut Vec<(f64, usize)>) -> f64 {
        self.standardizer.transform_row(row, buf);
        dist.clear();
        for (i, p) in self.points.chunks_exact(self.cols.max(1)).enumerate() {
            let d: f64 = p.iter().zip(buf.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            dist.push((d, i));
        }
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        dist[..k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64
    }
}
