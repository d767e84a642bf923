//! Interchange data model for review and organizational records.
//!
//! A corpus is three line-delimited JSON files: reviews, org assignments and
//! modules. [`load_corpus`] parses and validates them; [`filter_corpus`]
//! applies the dataset cleaning rules (non-code modules, huge changes, stale
//! reviews, bots).

mod filter;
mod io;
mod model;

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

pub use filter::{filter_corpus, FilterConfig};
pub use io::{
    load_corpus, load_corpus_dir, write_corpus, write_corpus_dir, CorpusPaths, MODULES_FILE, ORG_FILE, REVIEWS_FILE,
};
pub use model::*;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{file}:{line}: malformed record: {reason}")]
    MalformedRecord {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("dangling reference to unknown id {0:?}")]
    DanglingReference(String),
    #[error("overlapping validity intervals for {0:?}")]
    OverlappingInterval(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    fn malformed(file: &str, line: usize, reason: impl Into<String>) -> Self {
        CorpusError::MalformedRecord {
            file: file.to_string(),
            line,
            reason: reason.into(),
        }
    }
}

/// A validated, immutable corpus.
///
/// Reviews are sorted by `created_at`, ties broken by `review_id`.
#[derive(Debug, Clone)]
pub struct Corpus {
    reviews: Vec<ReviewRecord>,
    assignments: Vec<OrgAssignment>,
    modules: Vec<ModuleRecord>,
    module_index: HashMap<String, usize>,
    recomputed_loc: Vec<String>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.reviews == other.reviews
            && self.assignments == other.assignments
            && self.modules == other.modules
    }
}

/// Where a record came from, for error messages.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Origin<'a> {
    pub file: &'a str,
    /// Line number of each record, 1-based.
    pub lines: &'a [usize],
}

impl Origin<'_> {
    fn line(&self, idx: usize) -> usize {
        self.lines.get(idx).copied().unwrap_or(idx + 1)
    }
}

impl Corpus {
    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new(), Vec::new()).expect("empty corpus is valid")
    }

    /// Validates and assembles a corpus from in-memory records.
    pub fn new(
        reviews: Vec<ReviewRecord>,
        assignments: Vec<OrgAssignment>,
        modules: Vec<ModuleRecord>,
    ) -> Result<Self, CorpusError> {
        let r_lines: Vec<usize> = (1..=reviews.len()).collect();
        let a_lines: Vec<usize> = (1..=assignments.len()).collect();
        let m_lines: Vec<usize> = (1..=modules.len()).collect();
        Self::validated(
            reviews,
            assignments,
            modules,
            [
                Origin { file: "reviews", lines: &r_lines },
                Origin { file: "org", lines: &a_lines },
                Origin { file: "modules", lines: &m_lines },
            ],
        )
    }

    pub(crate) fn validated(
        mut reviews: Vec<ReviewRecord>,
        assignments: Vec<OrgAssignment>,
        modules: Vec<ModuleRecord>,
        origins: [Origin<'_>; 3],
    ) -> Result<Self, CorpusError> {
        let [r_origin, a_origin, m_origin] = origins;

        let mut module_index = HashMap::with_capacity(modules.len());
        for (i, m) in modules.iter().enumerate() {
            check_module(m).map_err(|r| CorpusError::malformed(m_origin.file, m_origin.line(i), r))?;
            if module_index.insert(m.module_id.clone(), i).is_some() {
                return Err(CorpusError::malformed(
                    m_origin.file,
                    m_origin.line(i),
                    format!("duplicate module_id {:?}", m.module_id),
                ));
            }
        }

        for (i, a) in assignments.iter().enumerate() {
            check_assignment(a)
                .map_err(|r| CorpusError::malformed(a_origin.file, a_origin.line(i), r))?;
        }

        let mut recomputed_loc = Vec::new();
        let mut seen = HashSet::with_capacity(reviews.len());
        for (i, r) in reviews.iter_mut().enumerate() {
            check_review(r).map_err(|reason| {
                CorpusError::malformed(r_origin.file, r_origin.line(i), reason)
            })?;
            if !seen.insert(r.review_id.clone()) {
                return Err(CorpusError::malformed(
                    r_origin.file,
                    r_origin.line(i),
                    format!("duplicate review_id {:?}", r.review_id),
                ));
            }
            let sum = r.file_loc_sum();
            if r.changed_loc == model::LOC_UNSET {
                r.changed_loc = sum;
            } else if r.changed_loc != sum {
                log::warn!(
                    "review {}: changed_loc {} disagrees with file totals {}; using {}",
                    r.review_id,
                    r.changed_loc,
                    sum,
                    sum
                );
                r.changed_loc = sum;
                recomputed_loc.push(r.review_id.clone());
            }
        }

        check_overlaps(&assignments, &modules)?;

        let employed: HashSet<&str> = assignments.iter().map(|a| a.developer_id.as_str()).collect();
        for r in &reviews {
            if !module_index.contains_key(&r.module_id) {
                return Err(CorpusError::DanglingReference(r.module_id.clone()));
            }
            if !r.is_bot_authored && !employed.contains(r.author_id.as_str()) {
                return Err(CorpusError::DanglingReference(r.author_id.clone()));
            }
            for c in r.comments.iter().filter(|c| !c.is_bot) {
                if !employed.contains(c.commenter_id.as_str()) {
                    return Err(CorpusError::DanglingReference(c.commenter_id.clone()));
                }
            }
        }

        reviews.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.review_id.cmp(&b.review_id))
        });

        Ok(Self {
            reviews,
            assignments,
            modules,
            module_index,
            recomputed_loc,
        })
    }

    pub fn reviews(&self) -> &[ReviewRecord] {
        &self.reviews
    }

    pub fn assignments(&self) -> &[OrgAssignment] {
        &self.assignments
    }

    pub fn modules(&self) -> &[ModuleRecord] {
        &self.modules
    }

    pub fn module(&self, module_id: &str) -> Option<&ModuleRecord> {
        self.module_index.get(module_id).map(|&i| &self.modules[i])
    }

    pub fn review(&self, review_id: &str) -> Option<&ReviewRecord> {
        self.reviews.iter().find(|r| r.review_id == review_id)
    }

    /// Review ids whose `changed_loc` was replaced by the sum over their files.
    pub fn recomputed_loc(&self) -> &[String] {
        &self.recomputed_loc
    }

    /// All developer ids with at least one org assignment, sorted.
    pub fn developers(&self) -> Vec<&str> {
        let mut devs: Vec<&str> = self
            .assignments
            .iter()
            .map(|a| a.developer_id.as_str())
            .collect();
        devs.sort_unstable();
        devs.dedup();
        devs
    }

    /// `[first created_at, last created_at + 1)`, or `None` when there are no reviews.
    pub fn span(&self) -> Option<(Timestamp, Timestamp)> {
        let first = self.reviews.first()?.created_at;
        let last = self.reviews.last()?.created_at;
        Some((first, last + 1))
    }

    pub(crate) fn with_reviews(&self, reviews: Vec<ReviewRecord>) -> Self {
        Self {
            reviews,
            assignments: self.assignments.clone(),
            modules: self.modules.clone(),
            module_index: self.module_index.clone(),
            recomputed_loc: Vec::new(),
        }
    }
}

fn check_review(r: &ReviewRecord) -> Result<(), String> {
    if r.review_id.is_empty() {
        return Err("empty review_id".into());
    }
    if let Some(closed) = r.closed_at {
        if closed < r.created_at {
            return Err(format!(
                "closed_at {closed} precedes created_at {}",
                r.created_at
            ));
        }
    }
    match (r.status, r.closed_at) {
        (ReviewStatus::Open, Some(_)) => return Err("open review has closed_at".into()),
        (ReviewStatus::Merged | ReviewStatus::Abandoned, None) => {
            return Err("closed review lacks closed_at".into())
        }
        _ => {}
    }
    let mut paths = HashSet::with_capacity(r.files.len());
    for f in &r.files {
        if f.path.is_empty() {
            return Err("empty file path".into());
        }
        if !paths.insert(f.path.as_str()) {
            return Err(format!("file {:?} listed twice", f.path));
        }
    }
    for c in &r.comments {
        let after_close = r.closed_at.is_some_and(|closed| c.timestamp > closed);
        if c.timestamp < r.created_at || after_close {
            return Err(format!(
                "comment by {:?} at {} lies outside the review lifetime",
                c.commenter_id, c.timestamp
            ));
        }
    }
    Ok(())
}

fn check_interval(from: Timestamp, to: Option<Timestamp>) -> Result<(), String> {
    match to {
        Some(end) if end <= from => Err(format!("valid_to {end} must exceed valid_from {from}")),
        _ => Ok(()),
    }
}

fn check_assignment(a: &OrgAssignment) -> Result<(), String> {
    if a.developer_id.is_empty() {
        return Err("empty developer_id".into());
    }
    check_interval(a.valid_from, a.valid_to)
}

fn check_module(m: &ModuleRecord) -> Result<(), String> {
    if m.module_id.is_empty() {
        return Err("empty module_id".into());
    }
    for t in &m.owning_team_intervals {
        check_interval(t.valid_from, t.valid_to)?;
    }
    for d in &m.maintainer_intervals {
        check_interval(d.valid_from, d.valid_to)?;
    }
    Ok(())
}

fn any_overlap(intervals: &mut [(Timestamp, Option<Timestamp>)]) -> bool {
    intervals.sort_by_key(|iv| iv.0);
    intervals.windows(2).any(|w| model::overlaps(w[0], w[1]))
}

fn check_overlaps(
    assignments: &[OrgAssignment],
    modules: &[ModuleRecord],
) -> Result<(), CorpusError> {
    let mut per_dev: BTreeMap<&str, Vec<(Timestamp, Option<Timestamp>)>> = BTreeMap::new();
    for a in assignments {
        per_dev
            .entry(&a.developer_id)
            .or_default()
            .push((a.valid_from, a.valid_to));
    }
    for (dev, mut ivs) in per_dev {
        if any_overlap(&mut ivs) {
            return Err(CorpusError::OverlappingInterval(dev.to_string()));
        }
    }

    for m in modules {
        let mut owners: Vec<_> = m
            .owning_team_intervals
            .iter()
            .map(|t| (t.valid_from, t.valid_to))
            .collect();
        if any_overlap(&mut owners) {
            return Err(CorpusError::OverlappingInterval(m.module_id.clone()));
        }
        let mut per_maintainer: BTreeMap<&str, Vec<(Timestamp, Option<Timestamp>)>> =
            BTreeMap::new();
        for d in &m.maintainer_intervals {
            per_maintainer
                .entry(&d.developer_id)
                .or_default()
                .push((d.valid_from, d.valid_to));
        }
        for (dev, mut ivs) in per_maintainer {
            if any_overlap(&mut ivs) {
                return Err(CorpusError::OverlappingInterval(format!(
                    "{}/{}",
                    m.module_id, dev
                )));
            }
        }
    }
    Ok(())
}
