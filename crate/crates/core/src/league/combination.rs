use serde::{Deserialize, Serialize};

use crate::policy::GroupId;

/// Where one agent type takes its policy from in an episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicySource {
    Frontier,
    League(GroupId),
}

/// Per-episode assignment: either every type runs the frontier, or exactly
/// one type runs a league member's policy and the rest run the frontier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedCombination {
    /// Position of the member in the league's sorted order when sampled.
    pub league_index: Option<usize>,
    pub member: Option<GroupId>,
    pub replaced_type: Option<usize>,
}

impl MixedCombination {
    pub fn pure() -> Self {
        Self {
            league_index: None,
            member: None,
            replaced_type: None,
        }
    }

    pub fn mixed(league_index: usize, member: GroupId, replaced_type: usize) -> Self {
        Self {
            league_index: Some(league_index),
            member: Some(member),
            replaced_type: Some(replaced_type),
        }
    }

    pub fn is_pure(&self) -> bool {
        self.member.is_none()
    }

    pub fn source(&self, d: usize) -> PolicySource {
        match (self.member, self.replaced_type) {
            (Some(g), Some(m)) if m == d => PolicySource::League(g),
            _ => PolicySource::Frontier,
        }
    }

    /// `(member, replaced type)` for mixed episodes.
    pub fn league_cell(&self) -> Option<(GroupId, usize)> {
        self.member.zip(self.replaced_type)
    }
}
