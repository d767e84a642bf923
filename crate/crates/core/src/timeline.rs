//! Point-in-time queries over a corpus.
//!
//! Every count query takes a horizon `t` and only sees reviews created
//! strictly before it, so features built on top of the index never look at
//! the future. Reviews are timestamped by their creation time; a reviewer's
//! participation counts at the review's `created_at`, not at comment time.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{covers, Corpus, Timestamp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimelineError {
    #[error("developer {developer:?} has no org assignment at {at}")]
    NoAssignment { developer: String, at: Timestamp },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Author,
    Reviewer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope<'a> {
    File(&'a str),
    Module(&'a str),
}

/// Decides who counts as a reviewer of a change.
///
/// A developer other than the author participates when they posted at least
/// `min_comments` non-bot comments on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipationRule {
    pub min_comments: usize,
}

impl Default for ParticipationRule {
    fn default() -> Self {
        Self { min_comments: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipationEvent {
    pub review_id: String,
    pub developer_id: String,
    pub role: Role,
    pub review_created_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrgPosition<'a> {
    pub team_id: &'a str,
    pub location_id: &'a str,
    pub manager_id: &'a str,
}

#[derive(Debug, Default, Clone)]
pub(crate) struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        id
    }

    pub(crate) fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub(crate) fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Sorted creation and closing times of the reviews a developer holds a
/// role in.
#[derive(Debug, Default, Clone)]
struct OpenLists {
    created: Vec<Timestamp>,
    closed: Vec<Timestamp>,
    // reviews with created_at == closed_at
    instant: Vec<Timestamp>,
}

impl OpenLists {
    fn push(&mut self, created: Timestamp, closed: Option<Timestamp>) {
        self.created.push(created);
        if let Some(c) = closed {
            self.closed.push(c);
            if c == created {
                self.instant.push(c);
            }
        }
    }

    fn finish(&mut self) {
        self.created.sort_unstable();
        self.closed.sort_unstable();
        self.instant.sort_unstable();
    }

    /// created_at ≤ t and still open at t.
    fn open_at(&self, t: Timestamp) -> u64 {
        let created = upto(&self.created, t);
        let closed = upto(&self.closed, t);
        (created - closed) as u64
    }

    /// created_at < t and still open at t.
    fn open_before(&self, t: Timestamp) -> u64 {
        let created = below(&self.created, t);
        // closed ≤ t and created < t; closed ≥ created so the only reviews in
        // `closed ≤ t` with created ≥ t are zero-length ones at exactly t.
        let closed = upto(&self.closed, t) - count_eq(&self.instant, t);
        (created - closed) as u64
    }
}

fn below(sorted: &[Timestamp], t: Timestamp) -> usize {
    sorted.partition_point(|&x| x < t)
}

fn upto(sorted: &[Timestamp], t: Timestamp) -> usize {
    sorted.partition_point(|&x| x <= t)
}

fn count_eq(sorted: &[Timestamp], t: Timestamp) -> usize {
    upto(sorted, t) - below(sorted, t)
}

fn count_window(sorted: &[Timestamp], window_start: Timestamp, t: Timestamp) -> u64 {
    if window_start >= t {
        return 0;
    }
    (below(sorted, t) - below(sorted, window_start)) as u64
}

#[derive(Debug, Clone)]
struct Position {
    from: Timestamp,
    to: Option<Timestamp>,
    team: u32,
    location: u32,
    manager: String,
}

type Interval = (Timestamp, Option<Timestamp>);

#[derive(Debug, Clone, Default)]
struct ReviewSlot {
    created_at: Timestamp,
    author: Option<u32>,
    /// Non-bot comment counts per commenter, sorted by developer id.
    comment_counts: Vec<(u32, u32)>,
    reviewers: Vec<u32>,
}

/// Immutable temporal index over a (filtered) corpus.
#[derive(Debug, Clone)]
pub struct TemporalIndex {
    rule: ParticipationRule,
    pub(crate) developers: Interner,
    pub(crate) files: Interner,
    pub(crate) modules: Interner,
    teams: Interner,
    locations: Interner,
    file_events: HashMap<(u32, u32, Role), Vec<Timestamp>>,
    module_events: HashMap<(u32, u32, Role), Vec<Timestamp>>,
    open: HashMap<(u32, Role), OpenLists>,
    positions: Vec<Vec<Position>>,
    maintainers: HashMap<(u32, u32), Vec<Interval>>,
    module_maintainers: HashMap<u32, Vec<(u32, Timestamp, Option<Timestamp>)>>,
    owners: HashMap<u32, Vec<(u32, Timestamp, Option<Timestamp>)>>,
    unowned_modules: Vec<u32>,
    review_slots: HashMap<String, usize>,
    slots: Vec<ReviewSlot>,
}

impl TemporalIndex {
    pub fn build(corpus: &Corpus, rule: ParticipationRule) -> Self {
        let mut developers = Interner::default();
        let mut files = Interner::default();
        let mut modules = Interner::default();
        let mut teams = Interner::default();
        let mut locations = Interner::default();

        let mut positions: Vec<Vec<Position>> = Vec::new();
        for a in corpus.assignments() {
            let dev = developers.intern(&a.developer_id) as usize;
            if positions.len() <= dev {
                positions.resize(dev + 1, Vec::new());
            }
            positions[dev].push(Position {
                from: a.valid_from,
                to: a.valid_to,
                team: teams.intern(&a.team_id),
                location: locations.intern(&a.location_id),
                manager: a.manager_id.clone(),
            });
        }
        for p in &mut positions {
            p.sort_by_key(|p| p.from);
        }

        let mut maintainers: HashMap<(u32, u32), Vec<Interval>> = HashMap::new();
        let mut module_maintainers: HashMap<u32, Vec<_>> = HashMap::new();
        let mut owners: HashMap<u32, Vec<_>> = HashMap::new();
        let mut unowned_modules = Vec::new();
        for m in corpus.modules() {
            let mid = modules.intern(&m.module_id);
            for iv in &m.maintainer_intervals {
                let dev = developers.intern(&iv.developer_id);
                maintainers
                    .entry((dev, mid))
                    .or_default()
                    .push((iv.valid_from, iv.valid_to));
                module_maintainers
                    .entry(mid)
                    .or_default()
                    .push((dev, iv.valid_from, iv.valid_to));
            }
            if m.owning_team_intervals.is_empty() {
                unowned_modules.push(mid);
            }
            for iv in &m.owning_team_intervals {
                let team = teams.intern(&iv.team_id);
                owners
                    .entry(team)
                    .or_default()
                    .push((mid, iv.valid_from, iv.valid_to));
            }
        }

        let mut file_events: HashMap<(u32, u32, Role), Vec<Timestamp>> = HashMap::new();
        let mut module_events: HashMap<(u32, u32, Role), Vec<Timestamp>> = HashMap::new();
        let mut open: HashMap<(u32, Role), OpenLists> = HashMap::new();
        let mut review_slots = HashMap::with_capacity(corpus.reviews().len());
        let mut slots = Vec::with_capacity(corpus.reviews().len());

        for review in corpus.reviews() {
            let author = developers.intern(&review.author_id);
            let module = modules.intern(&review.module_id);
            let file_ids: Vec<u32> = review.files.iter().map(|f| files.intern(&f.path)).collect();

            let mut counts: HashMap<u32, u32> = HashMap::new();
            for c in review.comments.iter().filter(|c| !c.is_bot) {
                *counts.entry(developers.intern(&c.commenter_id)).or_default() += 1;
            }
            let mut comment_counts: Vec<(u32, u32)> = counts.into_iter().collect();
            comment_counts.sort_unstable();
            let reviewers: Vec<u32> = comment_counts
                .iter()
                .filter(|&&(d, n)| d != author && n as usize >= rule.min_comments.max(1))
                .map(|&(d, _)| d)
                .collect();

            let t = review.created_at;
            let participants =
                std::iter::once((author, Role::Author)).chain(reviewers.iter().map(|&d| (d, Role::Reviewer)));
            for (dev, role) in participants {
                for &f in &file_ids {
                    file_events.entry((dev, f, role)).or_default().push(t);
                }
                module_events.entry((dev, module, role)).or_default().push(t);
                open.entry((dev, role)).or_default().push(t, review.closed_at);
            }

            review_slots.insert(review.review_id.clone(), slots.len());
            slots.push(ReviewSlot {
                created_at: t,
                author: Some(author),
                comment_counts,
                reviewers,
            });
        }

        // Reviews arrive sorted by created_at; sort anyway so the index does
        // not depend on that.
        for v in file_events.values_mut().chain(module_events.values_mut()) {
            v.sort_unstable();
        }
        for lists in open.values_mut() {
            lists.finish();
        }
        if positions.len() < developers.len() {
            positions.resize(developers.len(), Vec::new());
        }

        Self {
            rule,
            developers,
            files,
            modules,
            teams,
            locations,
            file_events,
            module_events,
            open,
            positions,
            maintainers,
            module_maintainers,
            owners,
            unowned_modules,
            review_slots,
            slots,
        }
    }

    pub fn rule(&self) -> ParticipationRule {
        self.rule
    }

    /// Number of distinct reviews with `window_start ≤ created_at < t` in
    /// `scope` where `developer` held `role`.
    pub fn count_by(
        &self,
        developer: &str,
        scope: Scope<'_>,
        role: Role,
        t: Timestamp,
        window_start: Timestamp,
    ) -> u64 {
        let Some(dev) = self.developers.get(developer) else {
            return 0;
        };
        match scope {
            Scope::File(path) => self
                .files
                .get(path)
                .map_or(0, |f| self.count_file(dev, f, role, t, window_start)),
            Scope::Module(m) => self
                .modules
                .get(m)
                .map_or(0, |m| self.count_module(dev, m, role, t, window_start)),
        }
    }

    pub(crate) fn count_file(&self, dev: u32, file: u32, role: Role, t: Timestamp, w: Timestamp) -> u64 {
        self.file_events
            .get(&(dev, file, role))
            .map_or(0, |ev| count_window(ev, w, t))
    }

    pub(crate) fn count_module(&self, dev: u32, module: u32, role: Role, t: Timestamp, w: Timestamp) -> u64 {
        self.module_events
            .get(&(dev, module, role))
            .map_or(0, |ev| count_window(ev, w, t))
    }

    /// Reviews with `created_at ≤ t` that are still open at `t` (closed_at
    /// absent or after `t`) where `developer` holds `role`.
    ///
    /// Reviewer participation qualifies a review from its creation, whenever
    /// the first comment was posted.
    pub fn open_reviews(&self, developer: &str, role: Role, t: Timestamp) -> u64 {
        self.developers
            .get(developer)
            .and_then(|d| self.open.get(&(d, role)))
            .map_or(0, |l| l.open_at(t))
    }

    /// Like [`open_reviews`](Self::open_reviews) but only counts reviews
    /// created strictly before `t`.
    pub fn open_reviews_before(&self, developer: &str, role: Role, t: Timestamp) -> u64 {
        self.developers
            .get(developer)
            .map_or(0, |d| self.open_before_id(d, role, t))
    }

    pub(crate) fn open_before_id(&self, dev: u32, role: Role, t: Timestamp) -> u64 {
        self.open.get(&(dev, role)).map_or(0, |l| l.open_before(t))
    }

    fn position_id(&self, dev: u32, t: Timestamp) -> Option<&Position> {
        let list = self.positions.get(dev as usize)?;
        let i = list.partition_point(|p| p.from <= t);
        let p = list.get(i.checked_sub(1)?)?;
        covers(p.from, p.to, t).then_some(p)
    }

    /// (team, location) ids at `t`.
    pub(crate) fn org_ids(&self, dev: u32, t: Timestamp) -> Option<(u32, u32)> {
        self.position_id(dev, t).map(|p| (p.team, p.location))
    }

    pub fn org_lookup(&self, developer: &str, t: Timestamp) -> Result<OrgPosition<'_>, TimelineError> {
        self.developers
            .get(developer)
            .and_then(|d| self.position_id(d, t))
            .map(|p| OrgPosition {
                team_id: self.teams.name(p.team),
                location_id: self.locations.name(p.location),
                manager_id: &p.manager,
            })
            .ok_or_else(|| TimelineError::NoAssignment {
                developer: developer.to_string(),
                at: t,
            })
    }

    pub fn is_employed(&self, developer: &str, t: Timestamp) -> bool {
        self.developers
            .get(developer)
            .is_some_and(|d| self.position_id(d, t).is_some())
    }

    pub fn maintainer_check(&self, developer: &str, module: &str, t: Timestamp) -> bool {
        match (self.developers.get(developer), self.modules.get(module)) {
            (Some(d), Some(m)) => self.is_maintainer_id(d, m, t),
            _ => false,
        }
    }

    pub(crate) fn is_maintainer_id(&self, dev: u32, module: u32, t: Timestamp) -> bool {
        self.maintainers
            .get(&(dev, module))
            .is_some_and(|ivs| ivs.iter().any(|&(from, to)| covers(from, to, t)))
    }

    /// Modules owned by `team` at `t`.
    ///
    /// Modules without any owning-team record are attributed to the teams of
    /// their maintainers at `t`.
    pub fn team_modules(&self, team: &str, t: Timestamp) -> BTreeSet<String> {
        let mut out = Vec::new();
        if let Some(team) = self.teams.get(team) {
            self.team_module_ids(team, t, &mut out);
        }
        out.into_iter()
            .map(|m| self.modules.name(m).to_string())
            .collect()
    }

    pub(crate) fn team_module_ids(&self, team: u32, t: Timestamp, out: &mut Vec<u32>) {
        out.clear();
        if let Some(owned) = self.owners.get(&team) {
            out.extend(
                owned
                    .iter()
                    .filter(|&&(_, from, to)| covers(from, to, t))
                    .map(|&(m, _, _)| m),
            );
        }
        for &m in &self.unowned_modules {
            let Some(maint) = self.module_maintainers.get(&m) else {
                continue;
            };
            let owned_by_team = maint.iter().any(|&(dev, from, to)| {
                covers(from, to, t) && self.org_ids(dev, t).is_some_and(|(tm, _)| tm == team)
            });
            if owned_by_team {
                out.push(m);
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    /// Number of modules whose team ownership is derived from maintainers.
    pub fn ownership_fallback_modules(&self) -> usize {
        self.unowned_modules.len()
    }

    /// Developers whose org assignment covers `t`, sorted by id.
    pub fn employed_at(&self, t: Timestamp) -> Vec<&str> {
        let mut out: Vec<&str> = (0..self.developers.len() as u32)
            .filter(|&d| self.position_id(d, t).is_some())
            .map(|d| self.developers.name(d))
            .collect();
        out.sort_unstable();
        out
    }

    fn slot(&self, review_id: &str) -> Option<&ReviewSlot> {
        self.review_slots.get(review_id).map(|&i| &self.slots[i])
    }

    /// Whether `developer` is a reviewer of `review_id` under the index rule.
    pub fn is_reviewer(&self, review_id: &str, developer: &str) -> bool {
        match (self.slot(review_id), self.developers.get(developer)) {
            (Some(s), Some(d)) => s.reviewers.binary_search(&d).is_ok(),
            _ => false,
        }
    }

    /// Non-bot comments posted by `developer` on `review_id`.
    pub fn comment_count(&self, review_id: &str, developer: &str) -> u32 {
        match (self.slot(review_id), self.developers.get(developer)) {
            (Some(s), Some(d)) => s
                .comment_counts
                .binary_search_by_key(&d, |&(dev, _)| dev)
                .map_or(0, |i| s.comment_counts[i].1),
            _ => 0,
        }
    }

    /// Reviewer ids of a review, sorted.
    pub fn reviewers(&self, review_id: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .slot(review_id)
            .map(|s| s.reviewers.iter().map(|&d| self.developers.name(d)).collect())
            .unwrap_or_default();
        out.sort_unstable();
        out
    }

    /// Author and reviewer events of a review.
    pub fn participation(&self, review_id: &str) -> Vec<ParticipationEvent> {
        let Some(slot) = self.slot(review_id) else {
            return Vec::new();
        };
        let event = |dev: u32, role| ParticipationEvent {
            review_id: review_id.to_string(),
            developer_id: self.developers.name(dev).to_string(),
            role,
            review_created_at: slot.created_at,
        };
        slot.author
            .map(|a| event(a, Role::Author))
            .into_iter()
            .chain(slot.reviewers.iter().map(|&d| event(d, Role::Reviewer)))
            .collect()
    }
}
