//! On-disk training state.
//!
//! ```text
//! checkpoint/
//!   state.json        counters, win-rate table, league order
//!   config.toml       the run configuration that produced it
//!   frontier/         frontier policy group
//!   learner/          optimizer moments
//!   league/<id>/      one directory per frozen member
//! ```
//!
//! A new checkpoint is assembled next to the old one and swapped in by rename.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::train::TrainState;
use crate::league::{BetaStats, League};
use crate::learner::PpoLearner;
use crate::policy::{GroupId, PolicyGroup};

#[derive(Serialize, Deserialize)]
struct StateFile {
    iteration: u64,
    episodes: u64,
    next_group_id: GroupId,
    league_capacity: usize,
    league: Vec<GroupId>,
    stats: BetaStats,
}

pub fn save_state(dir: &Path, config: &RunConfig, state: &TrainState) -> Result<()> {
    let tmp = dir.with_extension("tmp");
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    state.frontier.save(&tmp.join("frontier"))?;
    state.learner.save(&tmp.join("learner"))?;
    for m in state.league.members() {
        m.save(&tmp.join("league").join(m.group_id.to_string()))?;
    }
    let file = StateFile {
        iteration: state.iteration,
        episodes: state.episodes,
        next_group_id: state.next_group_id,
        league_capacity: state.league.capacity(),
        league: state.league.members().iter().map(|m| m.group_id).collect(),
        stats: state.stats.clone(),
    };
    let write = |name: &str, text: String| {
        let p = tmp.join(name);
        fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    write("state.json", serde_json::to_string_pretty(&file).expect("state serializes"))?;
    write("config.toml", config.to_toml_string())?;

    let old = dir.with_extension("old");
    if dir.exists() {
        if old.exists() {
            fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
        }
        fs::rename(dir, &old).map_err(|e| Error::io(dir, e))?;
    }
    fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))?;
    if old.exists() {
        fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    }
    Ok(())
}

/// Restores training state; `config` supplies the learner settings.
pub fn load_state(dir: &Path, config: &RunConfig) -> Result<TrainState> {
    let path = dir.join("state.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: StateFile = serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "checkpoint state",
        detail: e.to_string(),
    })?;
    let frontier = PolicyGroup::load(&dir.join("frontier"))?;
    let learner = PpoLearner::load(config.learner.clone(), &dir.join("learner"), frontier.num_types())?;
    let league = load_league(dir, file.league_capacity, &file.league)?;
    Ok(TrainState {
        iteration: file.iteration,
        episodes: file.episodes,
        next_group_id: file.next_group_id,
        frontier,
        learner,
        league,
        stats: file.stats,
    })
}

fn load_league(dir: &Path, capacity: usize, ids: &[GroupId]) -> Result<League> {
    let members = ids
        .iter()
        .map(|id| PolicyGroup::load(&dir.join("league").join(id.to_string())))
        .collect::<Result<Vec<_>>>()?;
    League::from_members(capacity, members)
}

/// Frontier and league for evaluation, plus the stored run configuration.
pub fn load_policies(dir: &Path) -> Result<(RunConfig, PolicyGroup, League)> {
    let config = RunConfig::load(&dir.join("config.toml"))?;
    let path = dir.join("state.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: StateFile = serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "checkpoint state",
        detail: e.to_string(),
    })?;
    let frontier = PolicyGroup::load(&dir.join("frontier"))?;
    let league = load_league(dir, file.league_capacity, &file.league)?;
    Ok((config, frontier, league))
}
