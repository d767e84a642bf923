//! Per-(review, candidate) feature vectors and named feature subsets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ReviewRecord, Timestamp};
use crate::timeline::{Role, TemporalIndex, TimelineError};

pub const N_FEATURES: usize = 12;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "changed_loc",
    "file_reviewer",
    "file_author",
    "module_reviewer",
    "module_author",
    "is_maintainer",
    "author_workload",
    "reviewer_workload",
    "same_team",
    "same_location",
    "team_interactions_rev",
    "team_interactions_aut",
];

/// Indices of the {0,1}-valued fields.
pub const BOOLEAN_FEATURES: [usize; 3] = [5, 8, 9];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error(transparent)]
    NoAssignment(#[from] TimelineError),
    #[error("candidate {candidate:?} is the author of review {review:?}")]
    AuthorAsCandidate { review: String, candidate: String },
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("unknown feature set {0:?}")]
    UnknownFeatureSet(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub changed_loc: f64,
    pub file_reviewer: f64,
    pub file_author: f64,
    pub module_reviewer: f64,
    pub module_author: f64,
    pub is_maintainer: f64,
    pub author_workload: f64,
    pub reviewer_workload: f64,
    pub same_team: f64,
    pub same_location: f64,
    pub team_interactions_rev: f64,
    pub team_interactions_aut: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.changed_loc,
            self.file_reviewer,
            self.file_author,
            self.module_reviewer,
            self.module_author,
            self.is_maintainer,
            self.author_workload,
            self.reviewer_workload,
            self.same_team,
            self.same_location,
            self.team_interactions_rev,
            self.team_interactions_aut,
        ]
    }

    pub fn from_array(a: [f64; N_FEATURES]) -> Self {
        Self {
            changed_loc: a[0],
            file_reviewer: a[1],
            file_author: a[2],
            module_reviewer: a[3],
            module_author: a[4],
            is_maintainer: a[5],
            author_workload: a[6],
            reviewer_workload: a[7],
            same_team: a[8],
            same_location: a[9],
            team_interactions_rev: a[10],
            team_interactions_aut: a[11],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "FR")]
    Fr,
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "WL")]
    Wl,
    #[serde(rename = "TR")]
    Tr,
    #[serde(rename = "PROPOSED")]
    Proposed,
    #[serde(rename = "ALL")]
    All,
}

impl FeatureSet {
    pub const EVERY: [FeatureSet; 7] = [
        FeatureSet::Loc,
        FeatureSet::Fr,
        FeatureSet::Co,
        FeatureSet::Wl,
        FeatureSet::Tr,
        FeatureSet::Proposed,
        FeatureSet::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Loc => "LOC",
            FeatureSet::Fr => "FR",
            FeatureSet::Co => "CO",
            FeatureSet::Wl => "WL",
            FeatureSet::Tr => "TR",
            FeatureSet::Proposed => "PROPOSED",
            FeatureSet::All => "ALL",
        }
    }

    pub fn mask(self) -> [bool; N_FEATURES] {
        let idx: &[usize] = match self {
            FeatureSet::Loc => &[0],
            FeatureSet::Fr => &[1],
            FeatureSet::Co => &[1, 2, 3, 4, 5],
            FeatureSet::Wl => &[6, 7],
            FeatureSet::Tr => &[8, 9, 10, 11],
            FeatureSet::Proposed => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
            FeatureSet::All => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
        };
        let mut m = [false; N_FEATURES];
        for &i in idx {
            m[i] = true;
        }
        m
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureSet::EVERY
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| FeatureError::UnknownFeatureSet(s.to_string()))
    }
}

/// A named subset of the feature fields, kept in canonical field order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelector {
    pub name: String,
    pub mask: [bool; N_FEATURES],
}

impl From<FeatureSet> for FeatureSelector {
    fn from(s: FeatureSet) -> Self {
        Self {
            name: s.name().to_string(),
            mask: s.mask(),
        }
    }
}

impl FeatureSelector {
    pub fn from_names<S: AsRef<str>>(name: &str, fields: &[S]) -> Result<Self, FeatureError> {
        let mut mask = [false; N_FEATURES];
        for f in fields {
            let i = feature_index(f.as_ref())
                .ok_or_else(|| FeatureError::UnknownFeature(f.as_ref().to_string()))?;
            mask[i] = true;
        }
        Ok(Self {
            name: name.to_string(),
            mask,
        })
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..N_FEATURES).filter(|&i| self.mask[i]).collect()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.indices().into_iter().map(|i| FEATURE_NAMES[i]).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Selected values only; masked-out fields are dropped, not zeroed.
    pub fn apply(&self, v: &FeatureVector) -> Vec<f64> {
        let a = v.to_array();
        self.indices().into_iter().map(|i| a[i]).collect()
    }
}

pub fn apply_selector(v: &FeatureVector, s: &FeatureSelector) -> Vec<f64> {
    s.apply(v)
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

/// Per-review state shared by every candidate of that review.
pub struct ReviewContext<'a> {
    index: &'a TemporalIndex,
    review: &'a ReviewRecord,
    t: Timestamp,
    w: Timestamp,
    author_org: (u32, u32),
    files: Vec<u32>,
    module: Option<u32>,
    team_modules: Vec<u32>,
}

impl<'a> ReviewContext<'a> {
    pub fn new(
        index: &'a TemporalIndex,
        review: &'a ReviewRecord,
        window_start: Timestamp,
    ) -> Result<Self, FeatureError> {
        let t = review.created_at;
        let no_assignment = || TimelineError::NoAssignment {
            developer: review.author_id.clone(),
            at: t,
        };
        let author_org = index
            .developers
            .get(&review.author_id)
            .and_then(|a| index.org_ids(a, t))
            .ok_or_else(no_assignment)?;
        let files = review
            .files
            .iter()
            .filter_map(|f| index.files.get(&f.path))
            .collect();
        let mut team_modules = Vec::new();
        index.team_module_ids(author_org.0, t, &mut team_modules);
        Ok(Self {
            index,
            review,
            t,
            w: window_start.min(t),
            author_org,
            files,
            module: index.modules.get(&review.module_id),
            team_modules,
        })
    }

    pub fn features(&self, candidate: &str) -> Result<FeatureVector, FeatureError> {
        if candidate == self.review.author_id {
            return Err(FeatureError::AuthorAsCandidate {
                review: self.review.review_id.clone(),
                candidate: candidate.to_string(),
            });
        }
        let idx = self.index;
        let (t, w) = (self.t, self.w);
        let no_assignment = || TimelineError::NoAssignment {
            developer: candidate.to_string(),
            at: t,
        };
        let dev = idx.developers.get(candidate).ok_or_else(no_assignment)?;
        let (team, location) = idx.org_ids(dev, t).ok_or_else(no_assignment)?;

        let file_sum = |role| -> f64 {
            self.files
                .iter()
                .map(|&f| idx.count_file(dev, f, role, t, w))
                .sum::<u64>() as f64
        };
        let module_count = |role| -> f64 {
            self.module
                .map_or(0, |m| idx.count_module(dev, m, role, t, w)) as f64
        };
        let team_sum = |role| -> f64 {
            self.team_modules
                .iter()
                .map(|&m| idx.count_module(dev, m, role, t, w))
                .sum::<u64>() as f64
        };
        let flag = |b: bool| if b { 1.0 } else { 0.0 };

        Ok(FeatureVector {
            changed_loc: self.review.changed_loc as f64,
            file_reviewer: file_sum(Role::Reviewer),
            file_author: file_sum(Role::Author),
            module_reviewer: module_count(Role::Reviewer),
            module_author: module_count(Role::Author),
            is_maintainer: flag(self.module.is_some_and(|m| idx.is_maintainer_id(dev, m, t))),
            // Strictly-before counts leave out the target review and anything
            // created in the same second.
            author_workload: idx.open_before_id(dev, Role::Author, t) as f64,
            reviewer_workload: idx.open_before_id(dev, Role::Reviewer, t) as f64,
            same_team: flag(team == self.author_org.0),
            same_location: flag(location == self.author_org.1),
            team_interactions_rev: team_sum(Role::Reviewer),
            team_interactions_aut: team_sum(Role::Author),
        })
    }
}

/// Features of `candidate` for `review` at the review's creation time,
/// counting history from `window_start` on.
pub fn compute_features(
    index: &TemporalIndex,
    review: &ReviewRecord,
    candidate: &str,
    window_start: Timestamp,
) -> Result<FeatureVector, FeatureError> {
    if candidate == review.author_id {
        return Err(FeatureError::AuthorAsCandidate {
            review: review.review_id.clone(),
            candidate: candidate.to_string(),
        });
    }
    ReviewContext::new(index, review, window_start)?.features(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{assignment, module, review};
    use crate::corpus::{Corpus, FileChange, ModuleCategory};
    use crate::timeline::ParticipationRule;

    #[test]
    fn set_masks() {
        assert_eq!(FeatureSelector::from(FeatureSet::All).len(), 12);
        assert_eq!(FeatureSelector::from(FeatureSet::Proposed).len(), 11);
        assert_eq!(FeatureSelector::from(FeatureSet::Co).names(), FEATURE_NAMES[1..6]);
        assert_eq!(
            FeatureSelector::from(FeatureSet::Tr).names(),
            ["same_team", "same_location", "team_interactions_rev", "team_interactions_aut"]
        );
        assert_eq!("proposed".parse::<FeatureSet>().unwrap(), FeatureSet::Proposed);
        assert!("XX".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn array_round_trip() {
        let a: [f64; 12] = std::array::from_fn(|i| i as f64);
        assert_eq!(FeatureVector::from_array(a).to_array(), a);
        let v = FeatureVector::from_array(a);
        let s = FeatureSelector::from_names("x", &["same_team", "changed_loc"]).unwrap();
        assert_eq!(s.apply(&v), vec![0.0, 8.0]);
    }

    #[test]
    fn author_is_rejected() {
        let c = Corpus::new(
            vec![review("c", "m", "a", 5, None)],
            vec![assignment("a", "t", "l", 0, None)],
            vec![module("m", "t", ModuleCategory::Code)],
        )
        .unwrap();
        let idx = TemporalIndex::build(&c, ParticipationRule::default());
        assert!(matches!(
            compute_features(&idx, &c.reviews()[0], "a", 0),
            Err(FeatureError::AuthorAsCandidate { .. })
        ));
        assert!(matches!(
            compute_features(&idx, &c.reviews()[0], "ghost", 0),
            Err(FeatureError::NoAssignment(_))
        ));
    }

    #[test]
    fn file_counts_sum_over_files() {
        let mut past = review("p", "m", "b", 1, Some(2));
        past.files = vec![FileChange::new("x", 1, 0), FileChange::new("y", 1, 0)];
        past.changed_loc = 2;
        let mut target = review("t", "m", "a", 10, None);
        target.files = vec![FileChange::new("x", 1, 0), FileChange::new("y", 1, 0)];
        target.changed_loc = 2;
        let c = Corpus::new(
            vec![past, target],
            vec![assignment("a", "t", "l", 0, None), assignment("b", "u", "k", 0, None)],
            vec![module("m", "t", ModuleCategory::Code)],
        )
        .unwrap();
        let idx = TemporalIndex::build(&c, ParticipationRule::default());
        let v = compute_features(&idx, c.review("t").unwrap(), "b", 0).unwrap();
        assert_eq!(v.file_author, 2.0);
        assert_eq!(v.module_author, 1.0);
        assert_eq!(v.team_interactions_aut, 1.0);
        assert_eq!((v.same_team, v.same_location), (0.0, 0.0));
        let late = compute_features(&idx, c.review("t").unwrap(), "b", 10).unwrap();
        assert_eq!(late.file_author + late.module_author + late.team_interactions_aut, 0.0);
    }
}
