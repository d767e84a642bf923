//! Shared test support: random corpora and brute-force oracles.
//!
//! The oracles scan the raw corpus records on every call and share no code
//! with the library beyond the record types.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::index::sample;
use rand::Rng;
use revsignal::corpus::{
    Comment, Corpus, FileChange, MaintainerInterval, ModuleCategory, ModuleRecord, OrgAssignment, ReviewRecord,
    ReviewStatus, TeamInterval, Timestamp,
};
use revsignal::metrics::Metric;
use revsignal::timeline::Role;

pub fn mc1_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("mc1")
}

pub fn mc1() -> Corpus {
    revsignal::corpus::load_corpus_dir(mc1_dir()).expect("MC1 fixture loads")
}

/// Shape of a random corpus.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub developers: usize,
    pub modules: usize,
    pub files_per_module: usize,
    pub reviews: usize,
    /// Creation times are drawn from `[0, horizon)`.
    pub horizon: Timestamp,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            developers: 5,
            modules: 3,
            files_per_module: 3,
            reviews: 30,
            horizon: 1000,
        }
    }
}

pub fn dev(i: usize) -> String {
    format!("d{i}")
}

fn team(i: usize) -> String {
    format!("T{i}")
}

/// Org and module records: some developers move team or join late, some
/// modules change owner and one may have no owner at all.
pub fn random_org(rng: &mut impl Rng, shape: &Shape) -> (Vec<OrgAssignment>, Vec<ModuleRecord>) {
    let h = shape.horizon;
    let mut assignments = Vec::new();
    for i in 0..shape.developers {
        let start = if rng.random_bool(0.2) { rng.random_range(0..h / 2) } else { 0 };
        let assignment = |t: usize, from, to| OrgAssignment {
            developer_id: dev(i),
            team_id: team(t),
            manager_id: format!("m{t}"),
            location_id: format!("L{}", (i + t) % 2),
            valid_from: from,
            valid_to: to,
        };
        let t0 = rng.random_range(0..3);
        if rng.random_bool(0.3) {
            let cut = rng.random_range(start + 1..h);
            assignments.push(assignment(t0, start, Some(cut)));
            assignments.push(assignment((t0 + 1) % 3, cut, None));
        } else {
            assignments.push(assignment(t0, start, None));
        }
    }
    let mut modules = Vec::new();
    for m in 0..shape.modules {
        let owning_team_intervals = match rng.random_range(0..4) {
            0 => Vec::new(),
            1 => {
                let cut = rng.random_range(1..h);
                vec![
                    TeamInterval {
                        team_id: team(m % 3),
                        valid_from: 0,
                        valid_to: Some(cut),
                    },
                    TeamInterval {
                        team_id: team((m + 1) % 3),
                        valid_from: cut,
                        valid_to: None,
                    },
                ]
            }
            _ => vec![TeamInterval {
                team_id: team(m % 3),
                valid_from: 0,
                valid_to: None,
            }],
        };
        let k = rng.random_range(0..=2.min(shape.developers));
        let maintainer_intervals = sample(rng, shape.developers, k)
            .into_iter()
            .map(|d| {
                let from = rng.random_range(0..h);
                MaintainerInterval {
                    developer_id: dev(d),
                    valid_from: from,
                    valid_to: rng.random_bool(0.5).then(|| rng.random_range(from + 1..=h)),
                }
            })
            .collect();
        modules.push(ModuleRecord {
            module_id: format!("M{m}"),
            owning_team_intervals,
            maintainer_intervals,
            category: if rng.random_bool(0.15) {
                ModuleCategory::Documentation
            } else {
                ModuleCategory::Code
            },
        });
    }
    (assignments, modules)
}

/// `n` reviews created in `[from, to)` with ids starting at `first_id`.
pub fn random_reviews(
    rng: &mut impl Rng,
    shape: &Shape,
    n: usize,
    from: Timestamp,
    to: Timestamp,
    first_id: usize,
) -> Vec<ReviewRecord> {
    (0..n)
        .map(|k| {
            let module = rng.random_range(0..shape.modules);
            // coarse times so that ties happen
            let created = from + rng.random_range(0..(to - from).max(1) / 10) * 10;
            let closed = rng.random_bool(0.75).then(|| created + rng.random_range(0..300));
            let nf = rng.random_range(1..=shape.files_per_module.min(3));
            let files = sample(rng, shape.files_per_module, nf)
                .into_iter()
                .map(|f| FileChange::new(format!("M{module}/f{f}"), rng.random_range(0..400), rng.random_range(0..200)))
                .collect();
            let until = closed.unwrap_or(created + 300);
            let mut comments = Vec::new();
            for _ in 0..rng.random_range(0..6) {
                let at = rng.random_range(created..=until);
                let who = dev(rng.random_range(0..shape.developers));
                comments.push(if rng.random_bool(0.1) {
                    Comment::bot("ci-bot", at)
                } else {
                    Comment::new(who, at)
                });
            }
            ReviewRecord {
                review_id: format!("r{:04}", first_id + k),
                module_id: format!("M{module}"),
                author_id: dev(rng.random_range(0..shape.developers)),
                created_at: created,
                closed_at: closed,
                status: match closed {
                    None => ReviewStatus::Open,
                    Some(_) if rng.random_bool(0.8) => ReviewStatus::Merged,
                    Some(_) => ReviewStatus::Abandoned,
                },
                files,
                changed_loc: 0,
                comments,
                is_bot_authored: rng.random_bool(0.05),
            }
            .with_loc()
        })
        .collect()
}

trait WithLoc {
    fn with_loc(self) -> Self;
}

impl WithLoc for ReviewRecord {
    fn with_loc(mut self) -> Self {
        self.changed_loc = self.file_loc_sum();
        self
    }
}

pub fn random_corpus(rng: &mut impl Rng, shape: &Shape) -> Corpus {
    let (assignments, modules) = random_org(rng, shape);
    let reviews = random_reviews(rng, shape, shape.reviews, 0, shape.horizon, 0);
    Corpus::new(reviews, assignments, modules).expect("random corpus is valid")
}

/// Linear-scan answers to every point-in-time query.
pub struct Oracle<'a> {
    pub corpus: &'a Corpus,
}

pub enum OracleScope<'a> {
    File(&'a str),
    Module(&'a str),
}

impl<'a> Oracle<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        Self { corpus }
    }

    pub fn is_reviewer(&self, r: &ReviewRecord, developer: &str) -> bool {
        developer != r.author_id && r.comments.iter().any(|c| !c.is_bot && c.commenter_id == developer)
    }

    fn holds(&self, r: &ReviewRecord, developer: &str, role: Role) -> bool {
        match role {
            Role::Author => r.author_id == developer,
            Role::Reviewer => self.is_reviewer(r, developer),
        }
    }

    pub fn count_by(&self, developer: &str, scope: &OracleScope, role: Role, t: Timestamp, w: Timestamp) -> u64 {
        self.corpus
            .reviews()
            .iter()
            .filter(|r| w <= r.created_at && r.created_at < t)
            .filter(|r| match scope {
                OracleScope::File(p) => r.files.iter().any(|f| f.path == *p),
                OracleScope::Module(m) => r.module_id == *m,
            })
            .filter(|r| self.holds(r, developer, role))
            .count() as u64
    }

    fn open_at(r: &ReviewRecord, t: Timestamp) -> bool {
        r.closed_at.is_none_or(|c| c > t)
    }

    pub fn open_reviews(&self, developer: &str, role: Role, t: Timestamp) -> u64 {
        self.corpus
            .reviews()
            .iter()
            .filter(|r| r.created_at <= t && Self::open_at(r, t) && self.holds(r, developer, role))
            .count() as u64
    }

    pub fn open_reviews_before(&self, developer: &str, role: Role, t: Timestamp) -> u64 {
        self.corpus
            .reviews()
            .iter()
            .filter(|r| r.created_at < t && Self::open_at(r, t) && self.holds(r, developer, role))
            .count() as u64
    }

    pub fn org(&self, developer: &str, t: Timestamp) -> Option<&'a OrgAssignment> {
        self.corpus
            .assignments()
            .iter()
            .find(|a| a.developer_id == developer && a.valid_from <= t && a.valid_to.is_none_or(|e| t < e))
    }

    pub fn is_maintainer(&self, developer: &str, module: &str, t: Timestamp) -> bool {
        self.corpus.modules().iter().any(|m| {
            m.module_id == module
                && m.maintainer_intervals
                    .iter()
                    .any(|i| i.developer_id == developer && i.valid_from <= t && i.valid_to.is_none_or(|e| t < e))
        })
    }

    /// Owned modules, plus modules without any owner record whose current
    /// maintainers sit in `team`.
    pub fn team_modules(&self, team: &str, t: Timestamp) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for m in self.corpus.modules() {
            let owned = if m.owning_team_intervals.is_empty() {
                m.maintainer_intervals.iter().any(|i| {
                    i.valid_from <= t
                        && i.valid_to.is_none_or(|e| t < e)
                        && self.org(&i.developer_id, t).is_some_and(|a| a.team_id == team)
                })
            } else {
                m.owning_team_intervals
                    .iter()
                    .any(|i| i.team_id == team && i.valid_from <= t && i.valid_to.is_none_or(|e| t < e))
            };
            if owned {
                out.insert(m.module_id.clone());
            }
        }
        out
    }

    /// The twelve features in declaration order, or `None` when the author
    /// or candidate has no assignment at the review's creation.
    pub fn features(&self, r: &ReviewRecord, candidate: &str, window_start: Timestamp) -> Option<[f64; 12]> {
        let t = r.created_at;
        let w = window_start.min(t);
        let a = self.org(&r.author_id, t)?;
        let c = self.org(candidate, t)?;
        let files = |role| -> f64 {
            r.files
                .iter()
                .map(|f| self.count_by(candidate, &OracleScope::File(&f.path), role, t, w))
                .sum::<u64>() as f64
        };
        let module = |role| self.count_by(candidate, &OracleScope::Module(&r.module_id), role, t, w) as f64;
        let team = |role| -> f64 {
            self.team_modules(&a.team_id, t)
                .iter()
                .map(|m| self.count_by(candidate, &OracleScope::Module(m), role, t, w))
                .sum::<u64>() as f64
        };
        let flag = |b: bool| b as u8 as f64;
        Some([
            r.changed_loc as f64,
            files(Role::Reviewer),
            files(Role::Author),
            module(Role::Reviewer),
            module(Role::Author),
            flag(self.is_maintainer(candidate, &r.module_id, t)),
            self.open_reviews_before(candidate, Role::Author, t) as f64,
            self.open_reviews_before(candidate, Role::Reviewer, t) as f64,
            flag(a.team_id == c.team_id),
            flag(a.location_id == c.location_id),
            team(Role::Reviewer),
            team(Role::Author),
        ])
    }

    /// Employed non-author developers at the review's creation, sorted.
    pub fn candidates(&self, r: &ReviewRecord) -> Vec<String> {
        let mut out: Vec<String> = self
            .corpus
            .assignments()
            .iter()
            .filter(|a| a.developer_id != r.author_id && a.valid_from <= r.created_at)
            .filter(|a| a.valid_to.is_none_or(|e| r.created_at < e))
            .map(|a| a.developer_id.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn comment_count(&self, r: &ReviewRecord, developer: &str) -> u32 {
        r.comments.iter().filter(|c| !c.is_bot && c.commenter_id == developer).count() as u32
    }
}

// ---- metric oracles ----

pub fn oracle_confusion(labels: &[bool], preds: &[bool]) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for i in 0..labels.len() {
        match (labels[i], preds[i]) {
            (true, true) => c.0 += 1,
            (false, true) => c.1 += 1,
            (false, false) => c.2 += 1,
            (true, false) => c.3 += 1,
        }
    }
    c
}

fn frac(num: u64, den: u64) -> Metric {
    if den == 0 {
        Metric::Undefined
    } else {
        Metric::Defined(num as f64 / den as f64)
    }
}

/// (precision, recall, F1).
pub fn oracle_prf(labels: &[bool], preds: &[bool]) -> (Metric, Metric, Metric) {
    let (tp, fp, _, fn_) = oracle_confusion(labels, preds);
    let p = frac(tp, tp + fp);
    let r = frac(tp, tp + fn_);
    let f = match (p, r) {
        // F1 straight from the counts
        (Metric::Defined(_), Metric::Defined(_)) if tp > 0 => Metric::Defined(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64),
        _ => Metric::Undefined,
    };
    (p, r, f)
}

/// Step-wise area under the precision/recall curve, thresholding at every
/// distinct score and counting from scratch each time.
pub fn oracle_auprc(labels: &[bool], scores: &[f64]) -> Metric {
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return Metric::Undefined;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for s in thresholds {
        let tp = (0..labels.len()).filter(|&i| labels[i] && scores[i] >= s).count();
        let predicted = scores.iter().filter(|&&v| v >= s).count();
        let recall = tp as f64 / pos as f64;
        area += (recall - prev_recall) * tp as f64 / predicted as f64;
        prev_recall = recall;
    }
    Metric::Defined(area)
}

pub fn oracle_rmse(y: &[f64], p: &[f64]) -> f64 {
    let n = y.len() as f64;
    (y.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt()
}

/// Pearson r from raw sums.
pub fn oracle_pearson(a: &[f64], b: &[f64]) -> Metric {
    let n = a.len() as f64;
    if a.len() < 2 {
        return Metric::Undefined;
    }
    let distinct = |v: &[f64]| v.iter().any(|&x| x != v[0]);
    if !distinct(a) || !distinct(b) {
        return Metric::Undefined;
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|y| y * y).sum();
    let r = (n * sab - sa * sb) / ((n * saa - sa * sa) * (n * sbb - sb * sb)).sqrt();
    Metric::Defined(r.clamp(-1.0, 1.0))
}

pub fn oracle_r2(y: &[f64], p: &[f64]) -> Metric {
    if y.len() < 2 || y.iter().all(|&v| v == y[0]) {
        return Metric::Undefined;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum();
    Metric::Defined(1.0 - ss_res / ss_tot)
}

/// Both undefined, or both defined and within `tol`.
pub fn metric_close(a: Metric, b: Metric, tol: f64) -> bool {
    match (a, b) {
        (Metric::Undefined, Metric::Undefined) => true,
        (Metric::Defined(x), Metric::Defined(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}

/// Spearman rank correlation; ties get their mean rank.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut out = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let mean_rank = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                out[k] = mean_rank;
            }
            i = j + 1;
        }
        out
    }
    let (ra, rb) = (ranks(a), ranks(b));
    oracle_pearson(&ra, &rb).value().unwrap_or(0.0)
}
