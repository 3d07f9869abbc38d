//! Win-rate bookkeeping per (league member, replaced type) cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::league::combination::MixedCombination;
use crate::policy::{GroupId, WinRecord};

/// Counters are halved once a cell has seen more than this many games.
pub const DECAY_THRESHOLD: f64 = 512.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaStats {
    num_types: usize,
    /// Serialized as a list because JSON maps need string keys.
    #[serde(with = "cell_list")]
    cells: BTreeMap<(GroupId, usize), WinRecord>,
    frontier: WinRecord,
}

mod cell_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<(GroupId, usize), WinRecord>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|(&(g, d), r)| (g, d, *r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(GroupId, usize), WinRecord>, D::Error> {
        let v: Vec<(GroupId, usize, WinRecord)> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|(g, t, r)| ((g, t), r)).collect())
    }
}

fn bump(rec: &mut WinRecord, won: bool) {
    rec.record(won);
    if rec.games > DECAY_THRESHOLD {
        rec.wins /= 2.0;
        rec.games /= 2.0;
    }
}

impl BetaStats {
    pub fn new(num_types: usize) -> Self {
        Self {
            num_types,
            cells: BTreeMap::new(),
            frontier: WinRecord::default(),
        }
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    /// Counts one finished episode against the scripted opponent.
    pub fn record_outcome(&mut self, combination: &MixedCombination, won: bool) {
        match combination.league_cell() {
            Some(cell) => bump(self.cells.entry(cell).or_default(), won),
            None => bump(&mut self.frontier, won),
        }
    }

    pub fn cell(&self, member: GroupId, d: usize) -> Option<&WinRecord> {
        self.cells.get(&(member, d))
    }

    /// `β(Π^[k,d])` for one cell, if it has games.
    pub fn cell_rate(&self, member: GroupId, d: usize) -> Option<f64> {
        self.cell(member, d).and_then(WinRecord::win_rate)
    }

    pub fn frontier(&self) -> &WinRecord {
        &self.frontier
    }

    /// Uniform mean over members of the cell rates for replaced type `d`;
    /// members without games in that cell are left out.
    pub fn type_rate(&self, d: usize) -> Option<f64> {
        let rates: Vec<f64> = self
            .cells
            .iter()
            .filter(|((_, t), _)| *t == d)
            .filter_map(|(_, r)| r.win_rate())
            .collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }

    /// Uniform mean of the defined per-type rates.
    pub fn overall_rate(&self) -> Option<f64> {
        let rates: Vec<f64> = (0..self.num_types).filter_map(|d| self.type_rate(d)).collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }

    /// Drops every cell of an evicted member.
    pub fn remove_member(&mut self, member: GroupId) {
        self.cells.retain(|(g, _), _| *g != member);
    }

    pub fn members(&self) -> impl Iterator<Item = GroupId> + '_ {
        let mut ids: Vec<GroupId> = self.cells.keys().map(|(g, _)| *g).collect();
        ids.dedup();
        ids.into_iter()
    }

    /// Forces a cell to a given count; used to set up controlled experiments.
    pub fn set_cell(&mut self, member: GroupId, d: usize, record: WinRecord) {
        self.cells.insert((member, d), record);
    }
}
