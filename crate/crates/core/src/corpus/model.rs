use serde::{Deserialize, Serialize};

/// UTC epoch seconds.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub lines_added: u64,
    pub lines_deleted: u64,
}

impl FileChange {
    pub fn new(path: impl Into<String>, lines_added: u64, lines_deleted: u64) -> Self {
        Self {
            path: path.into(),
            lines_added,
            lines_deleted,
        }
    }

    pub fn changed_lines(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub commenter_id: String,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub is_bot: bool,
}

impl Comment {
    pub fn new(commenter_id: impl Into<String>, timestamp: Timestamp) -> Self {
        Self {
            commenter_id: commenter_id.into(),
            timestamp,
            is_bot: false,
        }
    }

    pub fn bot(commenter_id: impl Into<String>, timestamp: Timestamp) -> Self {
        Self {
            commenter_id: commenter_id.into(),
            timestamp,
            is_bot: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Merged,
    Abandoned,
    Open,
}

/// One code change and its review lifecycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub review_id: String,
    pub module_id: String,
    pub author_id: String,
    pub created_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at: Option<Timestamp>,
    pub status: ReviewStatus,
    pub files: Vec<FileChange>,
    /// Missing on input means "derive from `files`".
    #[serde(default = "loc_unset")]
    pub changed_loc: u64,
    #[serde(default)]
    pub comments: Vec<Comment>,
    #[serde(default)]
    pub is_bot_authored: bool,
}

// Sentinel for an absent `changed_loc` field; replaced during validation.
pub(crate) const LOC_UNSET: u64 = u64::MAX;

fn loc_unset() -> u64 {
    LOC_UNSET
}

impl ReviewRecord {
    pub fn file_loc_sum(&self) -> u64 {
        self.files.iter().map(FileChange::changed_lines).sum()
    }

    pub fn is_closed(&self) -> bool {
        self.closed_at.is_some()
    }

    /// `closed_at - created_at` for closed reviews.
    pub fn duration(&self) -> Option<i64> {
        self.closed_at.map(|c| c - self.created_at)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgAssignment {
    pub developer_id: String,
    pub team_id: String,
    pub manager_id: String,
    pub location_id: String,
    pub valid_from: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_to: Option<Timestamp>,
}

impl OrgAssignment {
    pub fn covers(&self, t: Timestamp) -> bool {
        covers(self.valid_from, self.valid_to, t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamInterval {
    pub team_id: String,
    pub valid_from: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_to: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintainerInterval {
    pub developer_id: String,
    pub valid_from: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_to: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleCategory {
    Code,
    Documentation,
    Iac,
    ThirdParty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleRecord {
    pub module_id: String,
    #[serde(default)]
    pub owning_team_intervals: Vec<TeamInterval>,
    #[serde(default)]
    pub maintainer_intervals: Vec<MaintainerInterval>,
    pub category: ModuleCategory,
}

/// Half-open containment `t ∈ [from, to)`; an absent `to` is unbounded.
pub fn covers(from: Timestamp, to: Option<Timestamp>, t: Timestamp) -> bool {
    t >= from && to.is_none_or(|end| t < end)
}

pub(crate) fn overlaps(
    a: (Timestamp, Option<Timestamp>),
    b: (Timestamp, Option<Timestamp>),
) -> bool {
    let a_end = a.1.unwrap_or(Timestamp::MAX);
    let b_end = b.1.unwrap_or(Timestamp::MAX);
    a.0 < b_end && b.0 < a_end
}
