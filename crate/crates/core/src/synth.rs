//! Seeded synthetic corpora with a known generative model.
//!
//! Reviews arrive as a Poisson process. For every review each employed
//! developer other than the author participates with probability
//! `sigmoid(w · z + b)`, where `z` is the candidate's feature vector at the
//! review's creation time standardized with statistics frozen after a
//! warm-up period. Sizes and counts enter as `ln(1 + x)`, booleans as they
//! are. Participants post `c` comments with
//! `log10(1 + c) ≈ v · z + v0 + noise`.
//!
//! Participation feeds the count features, so the process needs time to
//! settle. It starts `burn_in_days` before the emitted span and those
//! reviews only shape the generator's state. Count features look back
//! `history_days` (or over the whole past when unset); with a finite
//! look-back the settled process is stationary.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_corpus_dir, Comment, Corpus, CorpusError, FileChange, MaintainerInterval, ModuleCategory, ModuleRecord,
    OrgAssignment, ReviewRecord, ReviewStatus, TeamInterval, Timestamp, SECONDS_PER_DAY,
};
use crate::features::{FeatureVector, BOOLEAN_FEATURES, N_FEATURES};
use crate::learners::sigmoid;
use crate::metrics::{average_precision, Metric};
use crate::timeline::Role;

pub const GROUND_TRUTH_FILE: &str = "ground_truth.ndjson";
pub const SUMMARY_FILE: &str = "synth.json";

/// 2017-01-01T00:00:00Z
pub const DEFAULT_START: Timestamp = 1_483_228_800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    pub coefficients: FeatureVector,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackWeights {
    pub coefficients: FeatureVector,
    pub intercept: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_developers: usize,
    pub n_teams: usize,
    pub n_locations: usize,
    pub n_modules: usize,
    pub n_files_per_module: usize,
    pub maintainers_per_module: usize,
    pub span_days: u32,
    pub reviews_per_day: f64,
    pub start: Timestamp,
    /// Look-back of the generator's count features; `None` means all history.
    pub history_days: Option<u32>,
    pub mean_review_days: f64,
    /// Probability that an author works in a module of their own team.
    pub home_module_bias: f64,
    /// Draw maintainers from the owning team rather than from everyone.
    pub maintainers_from_owning_team: bool,
    /// Simulated days before `start` that are not emitted.
    pub burn_in_days: u32,
    /// Days from the start of the simulation after which the
    /// standardization statistics are frozen.
    pub warmup_days: u32,
    /// Developers moved to another team halfway through the span.
    pub reorg_moves: usize,
    pub participation: LinearWeights,
    pub feedback: FeedbackWeights,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::planted()
    }
}

impl SynthConfig {
    /// Participation driven by the co-occurrence features only; feedback
    /// depends on every feature except `same_team` and `same_location`.
    ///
    /// Modules, maintainers and locations are drawn independently of teams,
    /// so the two org features carry no information at all.
    pub fn planted() -> Self {
        Self {
            n_developers: 50,
            n_teams: 5,
            n_locations: 3,
            n_modules: 20,
            n_files_per_module: 10,
            maintainers_per_module: 2,
            span_days: 810,
            reviews_per_day: 6.2,
            start: DEFAULT_START,
            history_days: Some(90),
            mean_review_days: 3.0,
            home_module_bias: 0.0,
            maintainers_from_owning_team: false,
            burn_in_days: 720,
            warmup_days: 180,
            reorg_moves: 0,
            participation: LinearWeights {
                coefficients: FeatureVector {
                    file_reviewer: 0.6,
                    file_author: 0.3,
                    module_reviewer: 0.8,
                    module_author: 0.3,
                    is_maintainer: 1.2,
                    ..FeatureVector::default()
                },
                intercept: -4.5,
            },
            feedback: FeedbackWeights {
                coefficients: FeatureVector {
                    changed_loc: 0.08,
                    file_reviewer: 0.08,
                    file_author: -0.06,
                    module_reviewer: 0.06,
                    module_author: -0.06,
                    is_maintainer: 0.1,
                    author_workload: -0.1,
                    reviewer_workload: -0.1,
                    same_team: 0.0,
                    same_location: 0.0,
                    team_interactions_rev: 0.06,
                    team_interactions_aut: 0.05,
                },
                intercept: 0.45,
                noise_sd: 0.03,
            },
            seed: 1,
        }
    }

    /// Both tasks depend only on features whose value does not change with
    /// how much history is visible: change size, maintainership and open
    /// workloads. Learners trained on any timeframe then face the same
    /// relation between features and outcome.
    pub fn stationary() -> Self {
        let mut c = Self::planted();
        c.participation.coefficients = FeatureVector {
            changed_loc: 0.3,
            is_maintainer: 1.0,
            author_workload: 0.4,
            ..FeatureVector::default()
        };
        c.feedback.coefficients = FeatureVector {
            changed_loc: 0.15,
            is_maintainer: 0.12,
            ..FeatureVector::default()
        };
        c
    }

    /// Every candidate participates with the same probability `sigmoid(b)`.
    pub fn constant(b: f64) -> Self {
        let mut c = Self::planted();
        c.participation = LinearWeights {
            coefficients: FeatureVector::default(),
            intercept: b,
        };
        c
    }

    pub fn validate(&self) -> Result<(), String> {
        let counts = [
            ("n_developers", self.n_developers),
            ("n_teams", self.n_teams),
            ("n_locations", self.n_locations),
            ("n_modules", self.n_modules),
            ("n_files_per_module", self.n_files_per_module),
            ("maintainers_per_module", self.maintainers_per_module),
            ("span_days", self.span_days as usize),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{name} must be at least 1"));
        }
        if self.n_developers < 2 {
            return Err("n_developers must be at least 2".into());
        }
        let rates = [self.reviews_per_day, self.mean_review_days];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err("rates must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.home_module_bias) {
            return Err("home_module_bias must lie in [0, 1]".into());
        }
        let weights = self
            .participation
            .coefficients
            .to_array()
            .into_iter()
            .chain(self.feedback.coefficients.to_array())
            .chain([self.participation.intercept, self.feedback.intercept, self.feedback.noise_sd]);
        if weights.into_iter().any(|w| !w.is_finite()) || self.feedback.noise_sd < 0.0 {
            return Err("weights must be finite and noise_sd non-negative".into());
        }
        Ok(())
    }

    pub fn span(&self) -> (Timestamp, Timestamp) {
        (self.start, self.start + self.span_days as i64 * SECONDS_PER_DAY)
    }
}

/// True model quantities for one (review, candidate) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTruth {
    pub review_id: String,
    pub candidate_id: String,
    pub probability: f64,
    /// `v · z + v0` before noise and rounding.
    pub expected_log_feedback: f64,
    pub participated: bool,
    pub comment_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub pairs: Vec<PairTruth>,
    /// Average precision of the true probabilities against the sampled
    /// participation over every pair.
    pub bayes_auprc: Metric,
    pub standardization_mean: Vec<f64>,
    pub standardization_scale: Vec<f64>,
}

impl GroundTruth {
    /// Bayes average precision over pairs whose review passes `keep`.
    pub fn bayes_auprc_where(&self, mut keep: impl FnMut(&PairTruth) -> bool) -> Metric {
        let (labels, scores): (Vec<bool>, Vec<f64>) = self
            .pairs
            .iter()
            .filter(|p| keep(p))
            .map(|p| (p.participated, p.probability))
            .unzip();
        if labels.is_empty() {
            return Metric::Undefined;
        }
        average_precision(&labels, &scores).unwrap_or(Metric::Undefined)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: [f64; N_FEATURES],
    m2: [f64; N_FEATURES],
}

impl Welford {
    fn add(&mut self, x: &[f64; N_FEATURES]) {
        self.n += 1.0;
        for j in 0..N_FEATURES {
            let d = x[j] - self.mean[j];
            self.mean[j] += d / self.n;
            self.m2[j] += d * (x[j] - self.mean[j]);
        }
    }

    fn scale(&self) -> [f64; N_FEATURES] {
        std::array::from_fn(|j| {
            let sd = if self.n > 0.0 { (self.m2[j] / self.n).sqrt() } else { 0.0 };
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
    }
}

#[derive(Clone, Copy)]
struct Position {
    team: usize,
    location: usize,
}

struct Org {
    // (valid_from, position); a developer has one or two entries
    positions: Vec<Vec<(Timestamp, Position)>>,
    module_team: Vec<usize>,
    team_modules: Vec<Vec<usize>>,
    maintainers: Vec<Vec<usize>>,
}

impl Org {
    fn at(&self, dev: usize, t: Timestamp) -> Position {
        let p = &self.positions[dev];
        let i = p.partition_point(|&(from, _)| from <= t);
        p[i.saturating_sub(1)].1
    }
}

fn role_slot(role: Role) -> usize {
    match role {
        Role::Author => 0,
        Role::Reviewer => 1,
    }
}

struct PastReview {
    created_at: Timestamp,
    module: usize,
    files: Vec<usize>,
    participants: Vec<(usize, Role)>,
}

/// Incrementally maintained history, equal to what the temporal index
/// answers for `window_start = t - history`.
struct State {
    file_counts: HashMap<(usize, usize, Role), u32>,
    module_counts: HashMap<(usize, usize, Role), u32>,
    window: VecDeque<PastReview>,
    open: Vec<[u32; 2]>,
    closing: BinaryHeap<Reverse<(Timestamp, usize, usize)>>,
    history: Option<i64>,
}

impl State {
    fn new(n_dev: usize, history: Option<i64>) -> Self {
        Self {
            file_counts: HashMap::new(),
            module_counts: HashMap::new(),
            window: VecDeque::new(),
            open: vec![[0; 2]; n_dev],
            closing: BinaryHeap::new(),
            history,
        }
    }

    fn advance(&mut self, t: Timestamp) {
        while let Some(&Reverse((closed, dev, slot))) = self.closing.peek() {
            if closed > t {
                break;
            }
            self.closing.pop();
            self.open[dev][slot] -= 1;
        }
        let Some(h) = self.history else { return };
        while self.window.front().is_some_and(|r| r.created_at < t - h) {
            let r = self.window.pop_front().expect("checked");
            for &(dev, role) in &r.participants {
                for &f in &r.files {
                    *self.file_counts.get_mut(&(dev, f, role)).expect("counted") -= 1;
                }
                *self.module_counts.get_mut(&(dev, r.module, role)).expect("counted") -= 1;
            }
        }
    }

    fn record(&mut self, review: PastReview, closed_at: Option<Timestamp>) {
        for &(dev, role) in &review.participants {
            for &f in &review.files {
                *self.file_counts.entry((dev, f, role)).or_default() += 1;
            }
            *self.module_counts.entry((dev, review.module, role)).or_default() += 1;
            self.open[dev][role_slot(role)] += 1;
            if let Some(c) = closed_at {
                self.closing.push(Reverse((c, dev, role_slot(role))));
            }
        }
        self.window.push_back(review);
    }

    fn file_count(&self, dev: usize, file: usize, role: Role) -> f64 {
        self.file_counts.get(&(dev, file, role)).copied().unwrap_or(0) as f64
    }

    fn module_count(&self, dev: usize, module: usize, role: Role) -> f64 {
        self.module_counts.get(&(dev, module, role)).copied().unwrap_or(0) as f64
    }

    #[allow(clippy::too_many_arguments)]
    fn features(
        &self,
        org: &Org,
        t: Timestamp,
        cand: usize,
        author: usize,
        module: usize,
        files: &[usize],
        changed_loc: u64,
    ) -> FeatureVector {
        let (cp, ap) = (org.at(cand, t), org.at(author, t));
        let files_sum = |role| files.iter().map(|&f| self.file_count(cand, f, role)).sum::<f64>();
        let team_sum = |role| {
            org.team_modules[ap.team]
                .iter()
                .map(|&m| self.module_count(cand, m, role))
                .sum::<f64>()
        };
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        FeatureVector {
            changed_loc: changed_loc as f64,
            file_reviewer: files_sum(Role::Reviewer),
            file_author: files_sum(Role::Author),
            module_reviewer: self.module_count(cand, module, Role::Reviewer),
            module_author: self.module_count(cand, module, Role::Author),
            is_maintainer: flag(org.maintainers[module].contains(&cand)),
            author_workload: self.open[cand][0] as f64,
            reviewer_workload: self.open[cand][1] as f64,
            same_team: flag(cp.team == ap.team),
            same_location: flag(cp.location == ap.location),
            team_interactions_rev: team_sum(Role::Reviewer),
            team_interactions_aut: team_sum(Role::Author),
        }
    }
}

pub fn developer_id(i: usize) -> String {
    format!("dev-{i:03}")
}

fn team_id(i: usize) -> String {
    format!("team-{i:02}")
}

fn module_id(i: usize) -> String {
    format!("mod-{i:03}")
}

fn file_path(module: usize, f: usize) -> String {
    format!("{}/file-{f:02}.src", module_id(module))
}

fn build_org(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> (Org, Vec<OrgAssignment>, Vec<ModuleRecord>) {
    let (start, end) = cfg.span();
    let mut positions: Vec<Vec<(Timestamp, Position)>> = (0..cfg.n_developers)
        .map(|i| {
            vec![(
                start,
                Position {
                    team: i % cfg.n_teams,
                    location: rng.random_range(0..cfg.n_locations),
                },
            )]
        })
        .collect();
    let mid = start + (end - start) / 2;
    let moves = cfg.reorg_moves.min(cfg.n_developers);
    if cfg.n_teams > 1 {
        for dev in sample(rng, cfg.n_developers, moves).into_vec() {
            let p = positions[dev][0].1;
            positions[dev].push((
                mid,
                Position {
                    team: (p.team + 1) % cfg.n_teams,
                    location: p.location,
                },
            ));
        }
    }
    let mut assignments = Vec::new();
    for (dev, ps) in positions.iter().enumerate() {
        for (k, &(from, p)) in ps.iter().enumerate() {
            assignments.push(OrgAssignment {
                developer_id: developer_id(dev),
                team_id: team_id(p.team),
                manager_id: format!("mgr-{:02}", p.team),
                location_id: format!("loc-{:02}", p.location),
                valid_from: from,
                valid_to: ps.get(k + 1).map(|&(to, _)| to),
            });
        }
    }

    let module_team: Vec<usize> = (0..cfg.n_modules).map(|m| m % cfg.n_teams).collect();
    let mut team_modules = vec![Vec::new(); cfg.n_teams];
    for (m, &t) in module_team.iter().enumerate() {
        team_modules[t].push(m);
    }
    let mut maintainers = Vec::with_capacity(cfg.n_modules);
    let mut modules = Vec::with_capacity(cfg.n_modules);
    for (m, &team) in module_team.iter().enumerate() {
        let members: Vec<usize> = (0..cfg.n_developers)
            .filter(|&d| !cfg.maintainers_from_owning_team || d % cfg.n_teams == team)
            .collect();
        let pool = if members.is_empty() {
            (0..cfg.n_developers).collect()
        } else {
            members
        };
        let k = cfg.maintainers_per_module.min(pool.len());
        let mut chosen: Vec<usize> = sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
        chosen.sort_unstable();
        modules.push(ModuleRecord {
            module_id: module_id(m),
            owning_team_intervals: vec![TeamInterval {
                team_id: team_id(team),
                valid_from: start,
                valid_to: None,
            }],
            maintainer_intervals: chosen
                .iter()
                .map(|&d| MaintainerInterval {
                    developer_id: developer_id(d),
                    valid_from: start,
                    valid_to: None,
                })
                .collect(),
            category: ModuleCategory::Code,
        });
        maintainers.push(chosen);
    }
    (
        Org {
            positions,
            module_team,
            team_modules,
            maintainers,
        },
        assignments,
        modules,
    )
}

fn arrival_times(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Timestamp> {
    let (start, end) = cfg.span();
    let start = start - cfg.burn_in_days as i64 * SECONDS_PER_DAY;
    let gap = Exp::new(cfg.reviews_per_day / SECONDS_PER_DAY as f64).expect("positive rate");
    let mut out = Vec::new();
    let mut t = start as f64;
    loop {
        t += gap.sample(rng);
        let ts = (t.floor() as Timestamp).max(out.last().map_or(start, |&p: &Timestamp| p + 1));
        if ts >= end {
            break;
        }
        t = t.max(ts as f64);
        out.push(ts);
    }
    out
}

/// Generates a corpus and its ground truth. Same config, same output.
pub fn generate(cfg: &SynthConfig) -> Result<(Corpus, GroundTruth), String> {
    generate_observed(cfg, |_, _| {})
}

/// As [`generate`], handing every raw candidate feature vector to `observe`
/// together with the review index.
pub(crate) fn generate_observed(
    cfg: &SynthConfig,
    mut observe: impl FnMut(usize, &FeatureVector),
) -> Result<(Corpus, GroundTruth), String> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (org, assignments, modules) = build_org(cfg, &mut rng);
    let (span_start, span_end) = cfg.span();
    let times = arrival_times(cfg, &mut rng);
    let freeze_at = span_start + (cfg.warmup_days as i64 - cfg.burn_in_days as i64) * SECONDS_PER_DAY;

    let duration: Exp<f64> = Exp::new(1.0 / (cfg.mean_review_days * SECONDS_PER_DAY as f64)).expect("positive mean");
    let loc: LogNormal<f64> = LogNormal::new(3.0, 1.2).expect("valid lognormal");
    let noise: Normal<f64> = Normal::new(0.0, cfg.feedback.noise_sd).expect("valid normal");
    let max_duration = 30 * SECONDS_PER_DAY - 1;
    let w = cfg.participation.coefficients.to_array();
    let v = cfg.feedback.coefficients.to_array();

    let mut state = State::new(cfg.n_developers, cfg.history_days.map(|d| d as i64 * SECONDS_PER_DAY));
    let mut stats = Welford::default();
    let mut frozen: Option<([f64; N_FEATURES], [f64; N_FEATURES])> = None;
    let mut reviews = Vec::with_capacity(times.len());
    let mut pairs = Vec::new();

    for &t in &times {
        state.advance(t);
        let emit = t >= span_start;
        let r = reviews.len();
        if t >= freeze_at && frozen.is_none() {
            frozen = Some((stats.mean, stats.scale()));
        }
        let author = rng.random_range(0..cfg.n_developers);
        let team = org.at(author, t).team;
        let module = if rng.random::<f64>() < cfg.home_module_bias && !org.team_modules[team].is_empty() {
            let own = &org.team_modules[team];
            own[rng.random_range(0..own.len())]
        } else {
            rng.random_range(0..cfg.n_modules)
        };
        debug_assert!(org.module_team[module] < cfg.n_teams);
        let n_files = match rng.random::<f64>() {
            u if u < 0.6 => 1,
            u if u < 0.9 => 2,
            _ => 3,
        }
        .min(cfg.n_files_per_module);
        let mut files: Vec<usize> = sample(&mut rng, cfg.n_files_per_module, n_files).into_vec();
        files.sort_unstable();
        let per_file_cap = 5000 / n_files as u64;
        let changes: Vec<FileChange> = files
            .iter()
            .map(|&f| {
                let added = (loc.sample(&mut rng).floor() as u64).min(per_file_cap);
                let deleted = ((added as f64) * rng.random::<f64>() * 0.5).floor() as u64;
                let deleted = deleted.min(per_file_cap - added);
                FileChange::new(file_path(module, f), added, deleted)
            })
            .collect();
        let changed_loc: u64 = changes.iter().map(FileChange::changed_lines).sum();
        // global file ids for the history counters
        let files: Vec<usize> = files.iter().map(|&f| module * cfg.n_files_per_module + f).collect();
        let lifetime = (duration.sample(&mut rng).ceil() as i64).clamp(1, max_duration);
        let closed_at = (t + lifetime < span_end).then_some(t + lifetime);

        let review_id = format!("r{r:06}");
        let mut comments = Vec::new();
        let mut participants = vec![(author, Role::Author)];
        let mut vectors = Vec::with_capacity(cfg.n_developers);
        for cand in (0..cfg.n_developers).filter(|&d| d != author) {
            let x = state.features(&org, t, cand, author, module, &files, changed_loc);
            if emit {
                observe(r, &x);
            }
            let mut xa = x.to_array();
            // sizes and counts are heavy tailed; the model sees them on a log scale
            for j in 0..N_FEATURES {
                if !BOOLEAN_FEATURES.contains(&j) {
                    xa[j] = xa[j].ln_1p();
                }
            }
            let z: [f64; N_FEATURES] = match &frozen {
                Some((mean, scale)) => std::array::from_fn(|j| (xa[j] - mean[j]) / scale[j]),
                None if stats.n > 0.0 => {
                    let scale = stats.scale();
                    std::array::from_fn(|j| (xa[j] - stats.mean[j]) / scale[j])
                }
                None => [0.0; N_FEATURES],
            };
            vectors.push(xa);
            let dot = |c: &[f64; N_FEATURES]| c.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            let p = sigmoid(dot(&w) + cfg.participation.intercept);
            let mu = dot(&v) + cfg.feedback.intercept;
            let participated = rng.random::<f64>() < p;
            let mut count = 0u32;
            if participated {
                let raw = 10f64.powf(mu + noise.sample(&mut rng)) - 1.0;
                count = raw.round().clamp(1.0, 1000.0) as u32;
                for _ in 0..count {
                    comments.push(Comment::new(developer_id(cand), t + rng.random_range(0..=lifetime)));
                }
                participants.push((cand, Role::Reviewer));
            }
            if !emit {
                continue;
            }
            pairs.push(PairTruth {
                review_id: review_id.clone(),
                candidate_id: developer_id(cand),
                probability: p,
                expected_log_feedback: mu,
                participated,
                comment_count: count,
            });
        }
        if frozen.is_none() {
            for xa in &vectors {
                stats.add(xa);
            }
        }
        comments.sort_by(|a, b| (a.timestamp, &a.commenter_id).cmp(&(b.timestamp, &b.commenter_id)));

        let status = match closed_at {
            None => ReviewStatus::Open,
            Some(_) if rng.random::<f64>() < 0.9 => ReviewStatus::Merged,
            Some(_) => ReviewStatus::Abandoned,
        };
        let record = PastReview {
            created_at: t,
            module,
            files,
            participants,
        };
        state.record(record, closed_at);
        if !emit {
            continue;
        }
        reviews.push(ReviewRecord {
            review_id,
            module_id: module_id(module),
            author_id: developer_id(author),
            created_at: t,
            closed_at,
            status,
            files: changes,
            changed_loc,
            comments,
            is_bot_authored: false,
        });
    }

    let (mean, scale) = frozen.unwrap_or_else(|| (stats.mean, stats.scale()));
    let corpus = Corpus::new(reviews, assignments, modules).map_err(|e| e.to_string())?;
    let mut truth = GroundTruth {
        pairs,
        bayes_auprc: Metric::Undefined,
        standardization_mean: mean.to_vec(),
        standardization_scale: scale.to_vec(),
    };
    truth.bayes_auprc = truth.bayes_auprc_where(|_| true);
    Ok((corpus, truth))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSummary {
    pub config: SynthConfig,
    pub n_reviews: usize,
    pub n_pairs: usize,
    pub participation_rate: f64,
    pub bayes_auprc: Metric,
}

/// Writes the corpus files, `ground_truth.ndjson` and `synth.json` to `dir`.
pub fn write_synth(dir: impl AsRef<Path>, cfg: &SynthConfig, corpus: &Corpus, truth: &GroundTruth) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    write_corpus_dir(corpus, dir)?;
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CorpusError::Io { path, source }
    };
    let gt = dir.join(GROUND_TRUTH_FILE);
    let mut out = BufWriter::new(File::create(&gt).map_err(io(&gt))?);
    for p in &truth.pairs {
        writeln!(out, "{}", serde_json::to_string(p).expect("serializable")).map_err(io(&gt))?;
    }
    out.flush().map_err(io(&gt))?;
    let positives = truth.pairs.iter().filter(|p| p.participated).count();
    let summary = SynthSummary {
        config: cfg.clone(),
        n_reviews: corpus.reviews().len(),
        n_pairs: truth.pairs.len(),
        participation_rate: positives as f64 / truth.pairs.len().max(1) as f64,
        bayes_auprc: truth.bayes_auprc,
    };
    let sp = dir.join(SUMMARY_FILE);
    std::fs::write(&sp, serde_json::to_string_pretty(&summary).expect("serializable") + "\n").map_err(io(&sp))
}
