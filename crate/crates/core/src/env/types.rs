use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Heterogeneous agent types. The order fixes one-hot and table layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Drone,
    Missile,
    Gun,
}

impl AgentType {
    pub const ALL: [AgentType; 3] = [AgentType::Drone, AgentType::Missile, AgentType::Gun];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_air(self) -> bool {
        self == AgentType::Drone
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for AgentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentType::Drone => "drone",
            AgentType::Missile => "missile",
            AgentType::Gun => "gun",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
}

impl Team {
    pub fn other(self) -> Team {
        match self {
            Team::A => Team::B,
            Team::B => Team::A,
        }
    }
}

/// Static abilities of one agent type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentTypeSpec {
    pub type_id: AgentType,
    pub max_health: f64,
    pub move_speed: f64,
    pub attack_range: f64,
    pub attack_damage: f64,
    pub can_attack_air: bool,
    pub repair_rate: f64,
    pub repair_range: f64,
}

impl AgentTypeSpec {
    pub fn default_for(t: AgentType) -> Self {
        match t {
            AgentType::Drone => Self {
                type_id: t,
                max_health: 60.0,
                move_speed: 3.0,
                attack_range: 4.0,
                attack_damage: 2.0,
                can_attack_air: true,
                repair_rate: 4.0,
                repair_range: 3.0,
            },
            AgentType::Missile => Self {
                type_id: t,
                max_health: 100.0,
                move_speed: 1.0,
                attack_range: 10.0,
                attack_damage: 12.0,
                can_attack_air: true,
                repair_rate: 0.0,
                repair_range: 0.0,
            },
            AgentType::Gun => Self {
                type_id: t,
                max_health: 220.0,
                move_speed: 1.2,
                attack_range: 5.0,
                attack_damage: 5.0,
                can_attack_air: false,
                repair_rate: 0.0,
                repair_range: 0.0,
            },
        }
    }

    pub fn can_target(&self, target: AgentType) -> bool {
        self.can_attack_air || !target.is_air()
    }
}

/// Partial override of one type's abilities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOverride {
    pub max_health: Option<f64>,
    pub move_speed: Option<f64>,
    pub attack_range: Option<f64>,
    pub attack_damage: Option<f64>,
    pub can_attack_air: Option<bool>,
    pub repair_rate: Option<f64>,
    pub repair_range: Option<f64>,
}

/// One spec per type, indexed by [`AgentType::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbilityTable {
    specs: [AgentTypeSpec; 3],
}

impl Default for AbilityTable {
    fn default() -> Self {
        Self {
            specs: AgentType::ALL.map(AgentTypeSpec::default_for),
        }
    }
}

impl AbilityTable {
    pub fn with_overrides(overrides: &BTreeMap<AgentType, SpecOverride>) -> Result<Self> {
        let mut table = Self::default();
        for (t, o) in overrides {
            let s = &mut table.specs[t.index()];
            macro_rules! set {
                ($($f:ident),*) => { $( if let Some(v) = o.$f { s.$f = v; } )* };
            }
            set!(max_health, move_speed, attack_range, attack_damage, can_attack_air, repair_rate, repair_range);
        }
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.specs.iter().enumerate() {
            if s.type_id.index() != i {
                return Err(Error::Config(format!("ability slot {i} holds {}", s.type_id)));
            }
            let mags = [
                s.max_health,
                s.move_speed,
                s.attack_range,
                s.attack_damage,
                s.repair_rate,
                s.repair_range,
            ];
            if mags.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Config(format!("{} abilities must be finite and non-negative", s.type_id)));
            }
            if s.max_health <= 0.0 {
                return Err(Error::Config(format!("{} max_health must be positive", s.type_id)));
            }
            if s.type_id != AgentType::Drone && s.repair_rate > 0.0 {
                return Err(Error::Config(format!("only drones may repair, {} has repair_rate > 0", s.type_id)));
            }
        }
        Ok(())
    }

    pub fn get(&self, t: AgentType) -> &AgentTypeSpec {
        &self.specs[t.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &AgentTypeSpec> {
        self.specs.iter()
    }
}

/// Number of agents of each type on each team.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeCounts {
    pub drone: usize,
    pub missile: usize,
    pub gun: usize,
}

impl TypeCounts {
    pub fn get(&self, t: AgentType) -> usize {
        match t {
            AgentType::Drone => self.drone,
            AgentType::Missile => self.missile,
            AgentType::Gun => self.gun,
        }
    }

    pub fn total(&self) -> usize {
        self.drone + self.missile + self.gun
    }
}

impl Default for TypeCounts {
    fn default() -> Self {
        Self {
            drone: 2,
            missile: 4,
            gun: 8,
        }
    }
}

/// Scenario configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub counts: TypeCounts,
    pub arena_size: f64,
    pub sensing_radius: f64,
    pub episode_limit: u32,
    /// Standard deviation of Gaussian noise on observed positions; 0 disables noise.
    pub obs_noise_std: f64,
    /// Half-width of the uniform jitter added to each spawn coordinate.
    pub spawn_jitter: f64,
    /// Number of entity slots in an observation.
    pub entity_slots: usize,
    pub abilities: BTreeMap<AgentType, SpecOverride>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            counts: TypeCounts::default(),
            arena_size: 40.0,
            sensing_radius: 12.0,
            episode_limit: 200,
            obs_noise_std: 0.0,
            spawn_jitter: 1.0,
            entity_slots: 12,
            abilities: BTreeMap::new(),
        }
    }
}

impl ScenarioConfig {
    /// The 7-vs-7 scenario: 1 drone, 2 missile vehicles, 4 gun vehicles per team.
    pub fn tiny() -> Self {
        Self {
            counts: TypeCounts {
                drone: 1,
                missile: 2,
                gun: 4,
            },
            entity_slots: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<AbilityTable> {
        for t in AgentType::ALL {
            if self.counts.get(t) == 0 {
                return Err(Error::Config(format!("scenario declares zero {t} agents per team")));
            }
        }
        if !(self.arena_size.is_finite() && self.arena_size > 0.0) {
            return Err(Error::Config("arena_size must be positive".into()));
        }
        if !(self.sensing_radius.is_finite() && self.sensing_radius > 0.0) {
            return Err(Error::Config("sensing_radius must be positive".into()));
        }
        if self.episode_limit == 0 {
            return Err(Error::Config("episode_limit must be at least 1".into()));
        }
        if !(self.obs_noise_std.is_finite() && self.obs_noise_std >= 0.0) {
            return Err(Error::Config("obs_noise_std must be non-negative".into()));
        }
        if !(self.spawn_jitter.is_finite() && self.spawn_jitter >= 0.0) {
            return Err(Error::Config("spawn_jitter must be non-negative".into()));
        }
        AbilityTable::with_overrides(&self.abilities)
    }

    pub fn agents_per_team(&self) -> usize {
        self.counts.total()
    }

    /// Observation vector length for this configuration.
    pub fn observation_len(&self) -> usize {
        SELF_FEATURES + self.entity_slots * ENTITY_FEATURES
    }
}

/// Position (2), health fraction, type one-hot (3).
pub const SELF_FEATURES: usize = 6;
/// Relative position (2), health fraction, type one-hot (3), enemy flag, valid flag.
pub const ENTITY_FEATURES: usize = 8;

/// Maximum engage slot.
pub const ENGAGE_SLOTS: usize = 3;
/// Hold, 8 moves, 3 engage slots, repair.
pub const NUM_ACTIONS: usize = 1 + 8 + ENGAGE_SLOTS + 1;

/// Discrete action. Move directions are in the acting team's frame:
/// direction 0 points toward the enemy side, then counter-clockwise in 45° steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Hold,
    Move(u8),
    /// Engage the k-th nearest visible legal enemy, 0-based.
    Engage(u8),
    Repair,
}

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Hold => 0,
            Action::Move(d) => 1 + d as usize,
            Action::Engage(k) => 9 + k as usize,
            Action::Repair => NUM_ACTIONS - 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Action::Hold),
            1..=8 => Some(Action::Move((i - 1) as u8)),
            9..=11 => Some(Action::Engage((i - 9) as u8)),
            12 => Some(Action::Repair),
            _ => None,
        }
    }

    /// Unit vector of a move direction in the team frame.
    pub fn direction(d: u8) -> [f64; 2] {
        let angle = d as f64 * std::f64::consts::FRAC_PI_4;
        let (s, c) = angle.sin_cos();
        [c, s]
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Hold => f.write_str("hold"),
            Action::Move(d) => write!(f, "move{d}"),
            Action::Engage(k) => write!(f, "engage{}", k + 1),
            Action::Repair => f.write_str("repair"),
        }
    }
}

pub type ActionMask = [bool; NUM_ACTIONS];
