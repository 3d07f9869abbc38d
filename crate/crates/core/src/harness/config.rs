use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{ScenarioConfig, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::learner::LearnerConfig;
use crate::policy::{NetConfig, NetShape};

/// Everything a training run needs. Serialized as TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Total training iterations; a resumed run stops here too.
    pub iterations: u64,
    /// Episodes collected per iteration (N_E).
    pub episodes_per_iteration: usize,
    /// Iterations between league updates (N_u).
    pub league_update_interval: u64,
    /// League capacity (K_m).
    pub league_capacity: usize,
    pub p_pure: f64,
    pub eval_gate_games: usize,
    pub eval_episodes: usize,
    pub parallel_envs: usize,
    pub output_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub learner: LearnerConfig,
    pub network: NetConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            iterations: 1000,
            episodes_per_iteration: 32,
            league_update_interval: 100,
            league_capacity: 10,
            p_pure: 0.1,
            eval_gate_games: 32,
            eval_episodes: 320,
            parallel_envs: 16,
            output_dir: PathBuf::from("runs/default"),
            scenario: ScenarioConfig::default(),
            learner: LearnerConfig::default(),
            network: NetConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.learner.validate()?;
        for (name, v) in [
            ("iterations", self.iterations as usize),
            ("episodes_per_iteration", self.episodes_per_iteration),
            ("league_update_interval", self.league_update_interval as usize),
            ("league_capacity", self.league_capacity),
            ("eval_gate_games", self.eval_gate_games),
            ("eval_episodes", self.eval_episodes),
            ("parallel_envs", self.parallel_envs),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_pure) {
            return Err(Error::Config("p_pure must lie in [0, 1]".into()));
        }
        if self.network.hidden.iter().any(|&h| h == 0) || self.network.hyper_hidden == 0 {
            return Err(Error::Config("network widths must be positive".into()));
        }
        Ok(())
    }

    /// Network shape shared by every agent type.
    pub fn net_shape(&self) -> NetShape {
        NetShape {
            obs_len: self.scenario.observation_len(),
            cond_len: 2 * crate::env::AgentType::COUNT,
            num_actions: NUM_ACTIONS,
            config: self.network.clone(),
        }
    }
}

/// Which policies fill the evaluated team.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Frontier policies for every type.
    Pure,
    /// Mixed combinations as in training, never pure.
    FrontierInclusive,
    /// Every type from one uniformly drawn league member.
    FrontierExclusive,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(Self::Pure),
            "frontier_inclusive" | "frontier-inclusive" => Ok(Self::FrontierInclusive),
            "frontier_exclusive" | "frontier-exclusive" => Ok(Self::FrontierExclusive),
            _ => Err(Error::Config(format!("unknown evaluation mode {s:?}"))),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pure => "pure",
            Self::FrontierInclusive => "frontier_inclusive",
            Self::FrontierExclusive => "frontier_exclusive",
        })
    }
}

/// Who controls team A during evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Checkpoint,
    Scripted,
    Random,
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "checkpoint" => Ok(Self::Checkpoint),
            "scripted" => Ok(Self::Scripted),
            "random" => Ok(Self::Random),
            _ => Err(Error::Config(format!("unknown controller {s:?}"))),
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Checkpoint => "checkpoint",
            Self::Scripted => "scripted",
            Self::Random => "random",
        })
    }
}
