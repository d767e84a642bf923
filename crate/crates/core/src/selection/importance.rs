//! Filter-style importance measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SelectionError;
use crate::examples::Task;
use crate::learners::{train, Algorithm, ForestParams, Matrix, ModelSpec, Params, Standardizer};
use crate::metrics::Metric;

pub const N_BINS: usize = 10;
pub const RELIEF_NEIGHBORS: usize = 10;
pub const MIN_EXAMPLES: usize = 20;

/// Equal-frequency bin index of every value.
///
/// Columns holding only 0 and 1 are returned as is. Duplicate cut points are
/// merged, so heavily tied columns get fewer bins.
pub fn discretize(values: &[f64], n_bins: usize) -> Result<Vec<u32>, SelectionError> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.first() == sorted.last() {
        return Err(SelectionError::DegenerateDiscretization(String::new()));
    }
    if values.iter().all(|&v| v == 0.0 || v == 1.0) {
        return Ok(values.iter().map(|&v| v as u32).collect());
    }
    let n = sorted.len();
    let mut cuts: Vec<f64> = (1..n_bins).map(|k| sorted[k * n / n_bins]).collect();
    cuts.dedup();
    // a cut at the minimum would leave the first bin empty
    cuts.retain(|&c| c > sorted[0]);
    Ok(values
        .iter()
        .map(|&v| cuts.partition_point(|&c| c <= v) as u32)
        .collect())
}

fn entropy(counts: impl Iterator<Item = f64>, total: f64) -> f64 {
    counts
        .filter(|&c| c > 0.0)
        .map(|c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Contingency table of bins × {negative, positive}.
fn table(bins: &[u32], labels: &[bool]) -> Vec<[f64; 2]> {
    let k = bins.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut t = vec![[0.0; 2]; k];
    for (&b, &l) in bins.iter().zip(labels) {
        t[b as usize][l as usize] += 1.0;
    }
    t
}

/// Label entropy minus conditional entropy given the bins, in bits.
pub fn information_gain(bins: &[u32], labels: &[bool]) -> f64 {
    let n = labels.len() as f64;
    let t = table(bins, labels);
    let pos: f64 = t.iter().map(|r| r[1]).sum();
    let h_y = entropy([n - pos, pos].into_iter(), n);
    let h_y_x: f64 = t
        .iter()
        .map(|r| {
            let m = r[0] + r[1];
            if m == 0.0 {
                0.0
            } else {
                m / n * entropy(r.iter().copied(), m)
            }
        })
        .sum();
    (h_y - h_y_x).max(0.0)
}

/// Information gain over the entropy of the bins; 0 when the bins carry no
/// information.
pub fn gain_ratio(bins: &[u32], labels: &[bool]) -> f64 {
    let n = labels.len() as f64;
    let t = table(bins, labels);
    let split = entropy(t.iter().map(|r| r[0] + r[1]), n);
    if split <= 0.0 {
        0.0
    } else {
        (information_gain(bins, labels) / split).min(1.0)
    }
}

/// Pearson χ² statistic of the bins × label contingency table.
pub fn chi_squared(bins: &[u32], labels: &[bool]) -> f64 {
    let n = labels.len() as f64;
    let t = table(bins, labels);
    let col = [t.iter().map(|r| r[0]).sum::<f64>(), t.iter().map(|r| r[1]).sum::<f64>()];
    let mut chi = 0.0;
    for r in &t {
        let row = r[0] + r[1];
        if row == 0.0 {
            continue;
        }
        for c in 0..2 {
            let e = row * col[c] / n;
            if e > 0.0 {
                chi += (r[c] - e) * (r[c] - e) / e;
            }
        }
    }
    chi
}

/// RReliefF weights with `k` nearest neighbors per instance, uniform
/// neighbor weights and every instance used once.
///
/// Neighbors are found by Euclidean distance on standardized features;
/// attribute and target differences are scaled by their ranges.
pub fn rrelieff(x: &Matrix, y: &[f64], k: usize) -> Vec<f64> {
    let (m, d) = (x.rows(), x.cols());
    if m < 2 || d == 0 {
        return vec![0.0; d];
    }
    let z = Standardizer::fit(x).transform(x);
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        hi - lo
    };
    let ranges: Vec<f64> = (0..d).map(|j| range(&mut (0..m).map(|i| x.get(i, j)))).collect();
    let y_range = range(&mut y.iter().copied());
    let k = k.min(m - 1).max(1);
    let weight = 1.0 / k as f64;

    // per instance: (N_dC, N_dA[..], N_dCdA[..])
    let parts: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let zi = &z[i * d..(i + 1) * d];
            let mut dist: Vec<(f64, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| {
                    let zj = &z[j * d..(j + 1) * d];
                    (zi.iter().zip(zj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j)
                })
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            let mut ndc = 0.0;
            let mut nda = vec![0.0; d];
            let mut ndcda = vec![0.0; d];
            for &(_, j) in &dist[..k] {
                let dc = if y_range > 0.0 { (y[i] - y[j]).abs() / y_range } else { 0.0 };
                ndc += dc * weight;
                for a in 0..d {
                    let da = if ranges[a] > 0.0 {
                        (x.get(i, a) - x.get(j, a)).abs() / ranges[a]
                    } else {
                        0.0
                    };
                    nda[a] += da * weight;
                    ndcda[a] += dc * da * weight;
                }
            }
            (ndc, nda, ndcda)
        })
        .collect();

    let mut ndc = 0.0;
    let mut nda = vec![0.0; d];
    let mut ndcda = vec![0.0; d];
    for (c, a, ca) in &parts {
        ndc += c;
        for j in 0..d {
            nda[j] += a[j];
            ndcda[j] += ca[j];
        }
    }
    let m = m as f64;
    (0..d)
        .map(|a| {
            let hit = if ndc > 0.0 { ndcda[a] / ndc } else { 0.0 };
            let miss = if m - ndc > 0.0 { (nda[a] - ndcda[a]) / (m - ndc) } else { 0.0 };
            hit - miss
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub information_gain: Metric,
    pub gini_importance: Metric,
    pub gain_ratio: Metric,
    pub chi_squared: Metric,
    pub rrelieff: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub task: Task,
    pub rows: Vec<FeatureImportance>,
    /// Features whose values were all equal.
    pub degenerate: Vec<String>,
}

/// Importance of every column of `x` for `task`.
///
/// Participation fills information gain, Gini importance, gain ratio and χ²
/// (labels are `y > 0.5`); feedback fills RReliefF. The other columns stay
/// undefined.
pub fn importance(x: &Matrix, y: &[f64], task: Task, seed: u64) -> Result<ImportanceReport, SelectionError> {
    if x.rows() < MIN_EXAMPLES {
        return Err(SelectionError::TooFewExamples(x.rows()));
    }
    if y.len() != x.rows() {
        return Err(SelectionError::Learn(crate::learners::LearnError::LengthMismatch(y.len(), x.rows())));
    }
    let mut rows: Vec<FeatureImportance> = x
        .names()
        .iter()
        .map(|f| FeatureImportance {
            feature: f.clone(),
            information_gain: Metric::Undefined,
            gini_importance: Metric::Undefined,
            gain_ratio: Metric::Undefined,
            chi_squared: Metric::Undefined,
            rrelieff: Metric::Undefined,
        })
        .collect();
    let mut degenerate = Vec::new();
    match task {
        Task::Participation => {
            let labels: Vec<bool> = y.iter().map(|&v| v > 0.5).collect();
            for (j, row) in rows.iter_mut().enumerate() {
                let (ig, gr, chi) = match discretize(&x.column(j), N_BINS) {
                    Ok(bins) => (
                        information_gain(&bins, &labels),
                        gain_ratio(&bins, &labels),
                        chi_squared(&bins, &labels),
                    ),
                    Err(_) => {
                        log::warn!("feature {} is constant; scored 0", row.feature);
                        degenerate.push(row.feature.clone());
                        (0.0, 0.0, 0.0)
                    }
                };
                row.information_gain = Metric::Defined(ig);
                row.gain_ratio = Metric::Defined(gr);
                row.chi_squared = Metric::Defined(chi);
            }
            let spec = ModelSpec::new(Algorithm::RandomForestClf(ForestParams::default()), seed);
            let gini = match train(&spec, x, y) {
                Ok(m) => match m.params {
                    Params::Forest(f) => f.importances,
                    _ => unreachable!("forest spec"),
                },
                Err(e) => {
                    log::warn!("gini importance unavailable: {e}");
                    vec![0.0; x.cols()]
                }
            };
            for (row, g) in rows.iter_mut().zip(gini) {
                row.gini_importance = Metric::Defined(g);
            }
        }
        Task::Feedback => {
            for (row, w) in rows.iter_mut().zip(rrelieff(x, y, RELIEF_NEIGHBORS)) {
                row.rrelieff = Metric::Defined(w);
            }
        }
    }
    Ok(ImportanceReport { task, rows, degenerate })
}
