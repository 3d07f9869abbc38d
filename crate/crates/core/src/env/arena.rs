//! World state, transition, observation and action masking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::types::*;
use crate::error::{Error, Result};

/// Reward scale applied to the survivor difference.
pub const REWARD_SCALE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub team: Team,
    pub kind: AgentType,
    /// World-frame position.
    pub pos: [f64; 2],
    pub health: f64,
    pub alive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub tick: u32,
    pub agents: Vec<AgentState>,
    pub episode_limit: u32,
    pub rng: ChaCha8Rng,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Team(Team),
    Draw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub winner: Winner,
    /// Survivors of team A and team B.
    pub remaining: [usize; 2],
    pub delta_n: usize,
    /// Reward paid to each agent of the winning team; the losers get its negation.
    pub reward: f64,
    pub length: u32,
}

impl EpisodeOutcome {
    pub fn reward_for(&self, team: Team) -> f64 {
        match self.winner {
            Winner::Draw => 0.0,
            Winner::Team(w) if w == team => self.reward,
            Winner::Team(_) => -self.reward,
        }
    }

    pub fn won_by(&self, team: Team) -> bool {
        self.winner == Winner::Team(team)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub features: Vec<f64>,
    /// Validity of each entity slot.
    pub slot_valid: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    /// Indexed by agent id. All zero unless `done`.
    pub rewards: Vec<f64>,
    pub done: bool,
    pub outcome: Option<EpisodeOutcome>,
}

/// Desk-scale two-team arena.
#[derive(Clone, Debug)]
pub struct Arena {
    config: ScenarioConfig,
    abilities: AbilityTable,
    state: WorldState,
    obs_rng: ChaCha8Rng,
    outcome: Option<EpisodeOutcome>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Arena {
    /// Spawns both teams. Team A holds ids `0..n`, team B `n..2n`, each ordered
    /// drones, missile vehicles, gun vehicles. Team B's formation is the mirror
    /// image of team A's across the vertical centre line; jitter is drawn
    /// independently per agent.
    pub fn reset(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        let abilities = config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let w = config.arena_size;
        let column = |t: AgentType| match t {
            AgentType::Missile => 0.05 * w,
            AgentType::Drone => 0.1 * w,
            AgentType::Gun => 0.15 * w,
        };
        let mut agents = Vec::with_capacity(2 * config.agents_per_team());
        for team in [Team::A, Team::B] {
            for kind in AgentType::ALL {
                let n = config.counts.get(kind);
                for j in 0..n {
                    let x = column(kind);
                    let y = w * (j as f64 + 1.0) / (n as f64 + 1.0);
                    let x = if team == Team::A { x } else { w - x };
                    agents.push(AgentState {
                        id: agents.len(),
                        team,
                        kind,
                        pos: [x, y],
                        health: abilities.get(kind).max_health,
                        alive: true,
                    });
                }
            }
        }
        let j = config.spawn_jitter;
        if j > 0.0 {
            for a in &mut agents {
                for c in &mut a.pos {
                    *c = (*c + rng.gen_range(-j..=j)).clamp(0.0, w);
                }
            }
        }
        Ok(Self {
            config: config.clone(),
            abilities,
            state: WorldState {
                tick: 0,
                agents,
                episode_limit: config.episode_limit,
                rng,
            },
            obs_rng,
            outcome: None,
        })
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    /// Direct access for scenario setup in tests and tools. Callers keep
    /// health within `[0, max_health]` and `alive` consistent with health.
    #[doc(hidden)]
    pub fn state_mut(&mut self) -> &mut WorldState {
        &mut self.state
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn abilities(&self) -> &AbilityTable {
        &self.abilities
    }

    pub fn num_agents(&self) -> usize {
        self.state.agents.len()
    }

    pub fn outcome(&self) -> Option<&EpisodeOutcome> {
        self.outcome.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn alive_count(&self, team: Team) -> usize {
        self.state.agents.iter().filter(|a| a.alive && a.team == team).count()
    }

    /// Converts a world-frame vector to `team`'s frame (team B is mirrored in x).
    pub fn to_team_frame(team: Team, v: [f64; 2]) -> [f64; 2] {
        match team {
            Team::A => v,
            Team::B => [-v[0], v[1]],
        }
    }

    fn team_position(&self, team: Team, p: [f64; 2]) -> [f64; 2] {
        match team {
            Team::A => p,
            Team::B => [self.config.arena_size - p[0], p[1]],
        }
    }

    /// Living enemies within sensing range that `agent` may attack, nearest
    /// first, ties by id. The first [`ENGAGE_SLOTS`] entries are the engage targets.
    pub fn engage_targets(&self, agent: usize) -> Vec<usize> {
        let me = &self.state.agents[agent];
        let spec = self.abilities.get(me.kind);
        let mut t: Vec<(f64, usize)> = self
            .state
            .agents
            .iter()
            .filter(|o| o.alive && o.team != me.team && spec.can_target(o.kind))
            .map(|o| (dist(me.pos, o.pos), o.id))
            .filter(|&(d, _)| d <= self.config.sensing_radius)
            .collect();
        t.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        t.into_iter().take(ENGAGE_SLOTS).map(|(_, id)| id).collect()
    }

    /// Nearest living, damaged ally of a drone within repair range.
    pub fn repair_target(&self, agent: usize) -> Option<usize> {
        let me = &self.state.agents[agent];
        let spec = self.abilities.get(me.kind);
        if spec.repair_rate <= 0.0 {
            return None;
        }
        self.state
            .agents
            .iter()
            .filter(|o| {
                o.alive
                    && o.id != agent
                    && o.team == me.team
                    && o.health < self.abilities.get(o.kind).max_health
            })
            .map(|o| (dist(me.pos, o.pos), o.id))
            .filter(|&(d, _)| d <= spec.repair_range)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }

    /// Legal actions of a living agent. Hold and all moves are always legal.
    pub fn action_mask(&self, agent: usize) -> Result<ActionMask> {
        let me = self
            .state
            .agents
            .get(agent)
            .ok_or_else(|| Error::Contract(format!("no agent {agent}")))?;
        if !me.alive {
            return Err(Error::Contract(format!("agent {agent} is dead")));
        }
        let mut mask = [false; NUM_ACTIONS];
        for m in mask.iter_mut().take(9) {
            *m = true;
        }
        let n = self.engage_targets(agent).len();
        for k in 0..n {
            mask[Action::Engage(k as u8).index()] = true;
        }
        mask[Action::Repair.index()] = self.repair_target(agent).is_some();
        Ok(mask)
    }

    /// Observation of a living agent in its team's frame.
    pub fn observe(&mut self, agent: usize) -> Result<Observation> {
        let noise = self.config.obs_noise_std;
        let mut obs = self.observe_clean(agent)?;
        if noise > 0.0 {
            let r = self.config.sensing_radius;
            for (s, valid) in obs.slot_valid.iter().enumerate() {
                if *valid {
                    let base = SELF_FEATURES + s * ENTITY_FEATURES;
                    for k in 0..2 {
                        obs.features[base + k] += self.obs_rng.sample::<f64, _>(StandardNormal) * noise / r;
                    }
                }
            }
        }
        Ok(obs)
    }

    /// Noise-free observation; a pure function of the world state.
    pub fn observe_clean(&self, agent: usize) -> Result<Observation> {
        let me = self
            .state
            .agents
            .get(agent)
            .ok_or_else(|| Error::Contract(format!("no agent {agent}")))?;
        if !me.alive {
            return Err(Error::Contract(format!("cannot observe dead agent {agent}")));
        }
        let w = self.config.arena_size;
        let r = self.config.sensing_radius;
        let slots = self.config.entity_slots;
        let mut features = vec![0.0; self.config.observation_len()];
        let p = self.team_position(me.team, me.pos);
        features[0] = p[0] / w;
        features[1] = p[1] / w;
        features[2] = me.health / self.abilities.get(me.kind).max_health;
        features[3..6].copy_from_slice(&me.kind.one_hot());

        let mut seen: Vec<(f64, usize)> = self
            .state
            .agents
            .iter()
            .filter(|o| o.alive && o.id != agent)
            .map(|o| (dist(me.pos, o.pos), o.id))
            .filter(|&(d, _)| d <= r)
            .collect();
        seen.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut slot_valid = vec![false; slots];
        for (s, &(_, id)) in seen.iter().take(slots).enumerate() {
            let o = &self.state.agents[id];
            let rel = Self::to_team_frame(me.team, [o.pos[0] - me.pos[0], o.pos[1] - me.pos[1]]);
            let base = SELF_FEATURES + s * ENTITY_FEATURES;
            features[base] = rel[0] / r;
            features[base + 1] = rel[1] / r;
            features[base + 2] = o.health / self.abilities.get(o.kind).max_health;
            features[base + 3..base + 6].copy_from_slice(&o.kind.one_hot());
            features[base + 6] = if o.team != me.team { 1.0 } else { 0.0 };
            features[base + 7] = 1.0;
            slot_valid[s] = true;
        }
        Ok(Observation { features, slot_valid })
    }

    /// Advances one tick. `actions` is indexed by agent id; entries of dead
    /// agents are ignored. Movement resolves first, then simultaneous attacks,
    /// then repairs, then deaths.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::Contract("step called on a finished episode".into()));
        }
        let n = self.num_agents();
        if actions.len() != n {
            return Err(Error::dim("step", n, actions.len()));
        }
        // Resolve targets against the pre-move state, as the agents observed it.
        let mut engage = vec![None; n];
        let mut repair = vec![None; n];
        for (i, &act) in actions.iter().enumerate() {
            if !self.state.agents[i].alive {
                continue;
            }
            let mask = self.action_mask(i)?;
            if !mask[act.index()] {
                return Err(Error::Contract(format!("agent {i} submitted masked action {act}")));
            }
            match act {
                Action::Engage(k) => engage[i] = Some(self.engage_targets(i)[k as usize]),
                Action::Repair => repair[i] = self.repair_target(i),
                _ => {}
            }
        }

        let w = self.config.arena_size;
        let start: Vec<[f64; 2]> = self.state.agents.iter().map(|a| a.pos).collect();
        for (i, &act) in actions.iter().enumerate() {
            let a = &self.state.agents[i];
            if !a.alive {
                continue;
            }
            let spec = self.abilities.get(a.kind);
            let delta = match act {
                Action::Move(d) => {
                    let u = Self::to_team_frame(a.team, Action::direction(d));
                    [u[0] * spec.move_speed, u[1] * spec.move_speed]
                }
                Action::Engage(_) => {
                    let target = start[engage[i].expect("resolved above")];
                    let d = dist(a.pos, target);
                    let travel = (d - spec.attack_range).clamp(0.0, spec.move_speed);
                    if travel > 0.0 {
                        [(target[0] - a.pos[0]) / d * travel, (target[1] - a.pos[1]) / d * travel]
                    } else {
                        [0.0, 0.0]
                    }
                }
                Action::Hold | Action::Repair => [0.0, 0.0],
            };
            let a = &mut self.state.agents[i];
            a.pos = [(a.pos[0] + delta[0]).clamp(0.0, w), (a.pos[1] + delta[1]).clamp(0.0, w)];
        }

        let mut damage = vec![0.0; n];
        for i in 0..n {
            if let Some(t) = engage[i] {
                let a = &self.state.agents[i];
                let spec = self.abilities.get(a.kind);
                if dist(a.pos, self.state.agents[t].pos) <= spec.attack_range {
                    damage[t] += spec.attack_damage;
                }
            }
        }
        for (a, d) in self.state.agents.iter_mut().zip(&damage) {
            if a.alive {
                a.health = (a.health - d).max(0.0);
            }
        }
        for i in 0..n {
            let Some(t) = repair[i] else { continue };
            let (healer, target) = (&self.state.agents[i], &self.state.agents[t]);
            let spec = self.abilities.get(healer.kind);
            if healer.health > 0.0 && target.health > 0.0 && dist(healer.pos, target.pos) <= spec.repair_range {
                let max = self.abilities.get(target.kind).max_health;
                let target = &mut self.state.agents[t];
                target.health = (target.health + spec.repair_rate).min(max);
            }
        }
        for a in &mut self.state.agents {
            if a.alive && a.health <= 0.0 {
                a.health = 0.0;
                a.alive = false;
            }
        }
        self.state.tick += 1;

        let (alive_a, alive_b) = (self.alive_count(Team::A), self.alive_count(Team::B));
        let done = alive_a == 0 || alive_b == 0 || self.state.tick >= self.state.episode_limit;
        let mut rewards = vec![0.0; n];
        if done {
            let outcome = settle(alive_a, alive_b, self.state.tick);
            for (r, a) in rewards.iter_mut().zip(&self.state.agents) {
                *r = outcome.reward_for(a.team);
            }
            self.outcome = Some(outcome);
        }
        Ok(StepResult {
            rewards,
            done,
            outcome: self.outcome.clone(),
        })
    }
}

/// Terminal outcome from survivor counts: the team with more survivors wins
/// `REWARD_SCALE * difference`.
pub fn settle(alive_a: usize, alive_b: usize, length: u32) -> EpisodeOutcome {
    let delta_n = alive_a.abs_diff(alive_b);
    let winner = match alive_a.cmp(&alive_b) {
        std::cmp::Ordering::Greater => Winner::Team(Team::A),
        std::cmp::Ordering::Less => Winner::Team(Team::B),
        std::cmp::Ordering::Equal => Winner::Draw,
    };
    EpisodeOutcome {
        winner,
        remaining: [alive_a, alive_b],
        delta_n,
        reward: REWARD_SCALE * delta_n as f64,
        length,
    }
}
