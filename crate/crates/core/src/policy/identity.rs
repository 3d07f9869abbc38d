//! Per-agent identity vector describing the episode's policy combination.

use crate::error::{Error, Result};

/// Performance slot value for types running frontier policies.
pub const FRONTIER_SLOT: f64 = 1.0;
/// Lower clamp for a league member's win rate inside the identity vector.
pub const MIN_LEAGUE_SLOT: f64 = 0.01;

/// `[f(d_1) .. f(d_M), onehot(d_i)]`, length `2M`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityRep {
    values: Vec<f64>,
}

impl IdentityRep {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_types(&self) -> usize {
        self.values.len() / 2
    }

    pub fn performance_slots(&self) -> &[f64] {
        &self.values[..self.num_types()]
    }

    pub fn type_one_hot(&self) -> &[f64] {
        &self.values[self.num_types()..]
    }
}

/// Identity for an agent of type `agent_type` when `replaced_type` (if any)
/// runs a league member whose win rate is `league_perf`.
///
/// Slot `x` holds the league win rate when `x` is the replaced type and the
/// agent is not of that type; every other slot holds [`FRONTIER_SLOT`]. The
/// win rate is clamped to `[MIN_LEAGUE_SLOT, 1]`.
pub fn build_identity(
    agent_type: usize,
    num_types: usize,
    replaced_type: Option<usize>,
    league_perf: f64,
) -> Result<IdentityRep> {
    if agent_type >= num_types {
        return Err(Error::Contract(format!("agent type {agent_type} not among {num_types} types")));
    }
    if let Some(m) = replaced_type {
        if m >= num_types {
            return Err(Error::Contract(format!("replaced type {m} not among {num_types} types")));
        }
    }
    let beta = if league_perf.is_nan() {
        MIN_LEAGUE_SLOT
    } else {
        league_perf.clamp(MIN_LEAGUE_SLOT, 1.0)
    };
    let mut values = vec![FRONTIER_SLOT; 2 * num_types];
    if let Some(m) = replaced_type {
        if agent_type != m {
            values[m] = beta;
        }
    }
    for (x, v) in values[num_types..].iter_mut().enumerate() {
        *v = if x == agent_type { 1.0 } else { 0.0 };
    }
    Ok(IdentityRep { values })
}
