//! Bagged CART trees for classification (Gini) and regression (variance).
//!
//! Each feature is reduced once per forest to dense ranks over its sorted
//! unique values. Split search at a node then either bucket-counts by rank
//! or sorts the node's samples, whichever is cheaper.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub classification: bool,
    pub trees: Vec<Tree>,
    /// Mean over trees of the weighted impurity decrease per feature.
    pub importances: Vec<f64>,
}

impl Forest {
    /// Classification: fraction of trees voting positive. Regression: mean
    /// of tree outputs.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let n = self.trees.len() as f64;
        if self.classification {
            self.trees.iter().filter(|t| t.predict(row) > 0.5).count() as f64 / n
        } else {
            self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / n
        }
    }
}

/// Column-wise rank encoding of a training matrix.
struct Ranked {
    uniques: Vec<Vec<f64>>,
    // ranks[j][i]: rank of row i in column j
    ranks: Vec<Vec<u32>>,
}

impl Ranked {
    fn new(x: &Matrix) -> Self {
        let mut uniques = Vec::with_capacity(x.cols());
        let mut ranks = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let col = x.column(j);
            let mut u = col.clone();
            u.sort_by(f64::total_cmp);
            u.dedup();
            ranks.push(
                col.iter()
                    .map(|v| u.partition_point(|a| a < v) as u32)
                    .collect(),
            );
            uniques.push(u);
        }
        Self { uniques, ranks }
    }
}

#[derive(Clone, Copy, Default)]
struct Stats {
    n: f64,
    sum: f64,
    sq: f64,
}

impl Stats {
    fn add(&mut self, y: f64) {
        self.n += 1.0;
        self.sum += y;
        self.sq += y * y;
    }

    fn merge(&mut self, o: &Stats) {
        self.n += o.n;
        self.sum += o.sum;
        self.sq += o.sq;
    }

    fn minus(&self, o: &Stats) -> Stats {
        Stats {
            n: self.n - o.n,
            sum: self.sum - o.sum,
            sq: self.sq - o.sq,
        }
    }

    /// Node size times impurity: twice the squared error for {0,1} labels
    /// (Gini), plain squared error otherwise.
    fn weighted_impurity(&self, classification: bool) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        let sse = (self.sq - self.sum * self.sum / self.n).max(0.0);
        if classification {
            2.0 * sse
        } else {
            sse
        }
    }
}

struct Best {
    gain: f64,
    feature: usize,
    // highest rank going left
    left_rank: u32,
    threshold: f64,
}

struct Builder<'a> {
    ranked: &'a Ranked,
    y: &'a [f64],
    params: ForestParams,
    classification: bool,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    buckets: Vec<Stats>,
    pairs: Vec<(u32, f64)>,
}

impl Builder<'_> {
    fn stats(&self, samples: &[u32]) -> Stats {
        let mut s = Stats::default();
        for &i in samples {
            s.add(self.y[i as usize]);
        }
        s
    }

    /// Best split of `samples` on feature `j`; `None` when the feature is
    /// constant there. The inner option is `None` when no split satisfies
    /// the leaf-size rule.
    fn scan_feature(&mut self, j: usize, samples: &[u32], total: &Stats, parent: f64) -> Option<Option<Best>> {
        let ranked: &Ranked = self.ranked;
        let y = self.y;
        let ranks = &ranked.ranks[j];
        let uniques = &ranked.uniques[j];
        let min_leaf = self.params.min_leaf.max(1) as f64;
        let classification = self.classification;
        let mut best: Option<Best> = None;
        let mut left = Stats::default();
        let mut prev: Option<u32> = None;
        let mut distinct = 0usize;
        let mut consider = |r: u32, group: &Stats, prev: &mut Option<u32>, left: &mut Stats| {
            if let Some(p) = *prev {
                let right = total.minus(left);
                if left.n >= min_leaf && right.n >= min_leaf {
                    let gain = parent - left.weighted_impurity(classification) - right.weighted_impurity(classification);
                    if best.as_ref().is_none_or(|b| gain > b.gain) {
                        best = Some(Best {
                            gain,
                            feature: j,
                            left_rank: p,
                            threshold: 0.5 * (uniques[p as usize] + uniques[r as usize]),
                        });
                    }
                }
            }
            left.merge(group);
            *prev = Some(r);
        };

        if uniques.len() <= samples.len() {
            let buckets = &mut self.buckets[..uniques.len()];
            buckets.fill(Stats::default());
            for &i in samples {
                buckets[ranks[i as usize] as usize].add(y[i as usize]);
            }
            for (r, group) in buckets.iter().enumerate() {
                if group.n > 0.0 {
                    distinct += 1;
                    consider(r as u32, group, &mut prev, &mut left);
                }
            }
        } else {
            self.pairs.clear();
            self.pairs
                .extend(samples.iter().map(|&i| (ranks[i as usize], y[i as usize])));
            self.pairs.sort_unstable_by_key(|p| p.0);
            let mut k = 0;
            while k < self.pairs.len() {
                let r = self.pairs[k].0;
                let mut group = Stats::default();
                while k < self.pairs.len() && self.pairs[k].0 == r {
                    group.add(self.pairs[k].1);
                    k += 1;
                }
                distinct += 1;
                consider(r, &group, &mut prev, &mut left);
            }
        }
        (distinct > 1).then_some(best)
    }

    fn grow(&mut self, samples: &mut [u32], n_total: f64) {
        // (node slot, range start, range end, depth)
        let mut stack = vec![(0usize, 0usize, samples.len(), 0usize)];
        self.nodes.push(Node::Leaf { value: 0.0 });
        let d = self.ranked.ranks.len();
        let mut features: Vec<usize> = (0..d).collect();
        while let Some((slot, lo, hi, depth)) = stack.pop() {
            let node_samples = &samples[lo..hi];
            let total = self.stats(node_samples);
            let value = total.sum / total.n;
            self.nodes[slot] = Node::Leaf { value };
            let parent = total.weighted_impurity(self.classification);
            let splittable = total.n >= 2.0 * self.params.min_leaf.max(1) as f64
                && self.params.max_depth.is_none_or(|m| depth < m)
                && parent > 1e-12;
            if !splittable {
                continue;
            }
            features.shuffle(&mut self.rng);
            let mut visited = 0;
            let mut best: Option<Best> = None;
            for fi in 0..d {
                if visited >= self.mtry {
                    break;
                }
                let j = features[fi];
                if let Some(b) = self.scan_feature(j, &samples[lo..hi], &total, parent) {
                    visited += 1;
                    if let Some(b) = b {
                        if best.as_ref().is_none_or(|cur| b.gain > cur.gain) {
                            best = Some(b);
                        }
                    }
                }
            }
            let Some(best) = best.filter(|b| b.gain > 1e-12) else {
                continue;
            };
            let ranks = &self.ranked.ranks[best.feature];
            let node = &mut samples[lo..hi];
            let mut split = 0;
            for k in 0..node.len() {
                if ranks[node[k] as usize] <= best.left_rank {
                    node.swap(k, split);
                    split += 1;
                }
            }
            self.importance[best.feature] += best.gain / n_total;
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf { value });
            self.nodes.push(Node::Leaf { value });
            self.nodes[slot] = Node::Split {
                feature: best.feature as u32,
                threshold: best.threshold,
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, lo + split, hi, depth + 1));
            stack.push((left, lo, lo + split, depth + 1));
        }
    }
}

fn mtry(d: usize, classification: bool) -> usize {
    if classification {
        ((d as f64).sqrt().floor() as usize).max(1)
    } else {
        (d / 3).max(1)
    }
}

fn build_tree(
    ranked: &Ranked,
    y: &[f64],
    params: ForestParams,
    classification: bool,
    seed: u64,
) -> (Tree, Vec<f64>) {
    let n = y.len();
    let d = ranked.ranks.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
    let max_unique = ranked.uniques.iter().map(Vec::len).max().unwrap_or(0);
    let mut b = Builder {
        ranked,
        y,
        params,
        classification,
        mtry: mtry(d, classification),
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; d],
        buckets: vec![Stats::default(); max_unique],
        pairs: Vec::new(),
    };
    b.grow(&mut samples, n as f64);
    (Tree { nodes: b.nodes }, b.importance)
}

/// Trains `params.n_trees` trees in parallel; tree `i` uses seed `seed + i`,
/// so the result does not depend on the thread count.
pub(crate) fn fit_forest(x: &Matrix, y: &[f64], params: ForestParams, classification: bool, seed: u64) -> Forest {
    let ranked = Ranked::new(x);
    let built: Vec<(Tree, Vec<f64>)> = (0..params.n_trees.max(1))
        .into_par_iter()
        .map(|t| build_tree(&ranked, y, params, classification, seed.wrapping_add(t as u64)))
        .collect();
    let mut importances = vec![0.0; x.cols()];
    for (_, imp) in &built {
        for (a, v) in importances.iter_mut().zip(imp) {
            *a += v;
        }
    }
    let n = built.len() as f64;
    importances.iter_mut().for_each(|a| *a /= n);
    Forest {
        classification,
        trees: built.into_iter().map(|(t, _)| t).collect(),
        importances,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data(n: usize) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = xs.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        (Matrix::new(n, 1, xs, vec!["x".into()]).unwrap(), y)
    }

    #[test]
    fn learns_a_threshold() {
        let (x, y) = step_data(100);
        let f = fit_forest(&x, &y, ForestParams { n_trees: 10, ..Default::default() }, true, 1);
        let acc = (0..100)
            .filter(|&i| (f.predict(x.row(i)) >= 0.5) == (y[i] == 1.0))
            .count();
        assert!(acc >= 95, "accuracy {acc}");
        assert!(f.importances[0] > 0.0);
    }

    #[test]
    fn depth_zero_is_a_stump_leaf() {
        let (x, y) = step_data(50);
        let p = ForestParams {
            n_trees: 3,
            max_depth: Some(0),
            min_leaf: 1,
        };
        let f = fit_forest(&x, &y, p, false, 9);
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn min_leaf_is_respected() {
        let (x, y) = step_data(40);
        let p = ForestParams {
            n_trees: 1,
            max_depth: None,
            min_leaf: 15,
        };
        let f = fit_forest(&x, &y, p, true, 2);
        // with 40 samples and leaves of at least 15 there is room for one split
        assert!(f.trees[0].nodes.len() <= 3);
    }

    #[test]
    fn mtry_rules() {
        assert_eq!(mtry(12, true), 3);
        assert_eq!(mtry(12, false), 4);
        assert_eq!(mtry(1, false), 1);
    }
}
