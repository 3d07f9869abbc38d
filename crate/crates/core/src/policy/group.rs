use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::checkpoint::{load_tensors, save_tensors};
use crate::nn::{masked_log_softmax, Tensor2};
use crate::policy::identity::IdentityRep;
use crate::policy::net::{ActorCriticNet, HeadCache, NetShape};

pub type GroupId = u64;

/// Win/game counters. Stored as reals so they can be decayed by halving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WinRecord {
    pub wins: f64,
    pub games: f64,
}

impl WinRecord {
    pub fn record(&mut self, won: bool) {
        self.games += 1.0;
        if won {
            self.wins += 1.0;
        }
    }

    pub fn win_rate(&self) -> Option<f64> {
        (self.games > 0.0).then(|| self.wins / self.games)
    }

    pub fn merge(&mut self, other: &WinRecord) {
        self.wins += other.wins;
        self.games += other.games;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActMode {
    Sample,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActOutput {
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
}

/// Picks an action from one row of logits under `mask`. Greedy ties go to
/// the lowest index.
pub fn choose_action(logits: &[f64], mask: &[bool], rng: &mut impl Rng, mode: ActMode) -> Result<(usize, f64)> {
    if logits.len() != mask.len() {
        return Err(Error::dim("act mask", logits.len(), mask.len()));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Contract("every action is masked".into()));
    }
    let logp = masked_log_softmax(&Tensor2::row(logits), mask)?.into_data();
    let action = match mode {
        ActMode::Greedy => {
            let mut best = None::<usize>;
            for (i, &l) in logits.iter().enumerate() {
                if mask[i] && best.map_or(true, |b| l > logits[b]) {
                    best = Some(i);
                }
            }
            best.expect("some action is legal")
        }
        ActMode::Sample => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut last = 0;
            let mut pick = None;
            for (i, &lp) in logp.iter().enumerate() {
                if !mask[i] {
                    continue;
                }
                last = i;
                acc += lp.exp();
                if u < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or(last)
        }
    };
    Ok((action, logp[action]))
}

/// One policy per agent type plus a win-rate record.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyGroup {
    pub group_id: GroupId,
    policies: Vec<ActorCriticNet>,
    frozen: bool,
    pub perf: WinRecord,
}

#[derive(Serialize, Deserialize)]
struct GroupManifest {
    group_id: GroupId,
    frozen: bool,
    perf: WinRecord,
    policies: Vec<PolicyEntry>,
}

#[derive(Serialize, Deserialize)]
struct PolicyEntry {
    shape: NetShape,
    actor: String,
    critic: String,
}

impl PolicyGroup {
    pub fn new(group_id: GroupId, shapes: Vec<NetShape>, rng: &mut impl Rng) -> Self {
        let policies = shapes.into_iter().map(|s| ActorCriticNet::init(s, rng)).collect();
        Self {
            group_id,
            policies,
            frozen: false,
            perf: WinRecord::default(),
        }
    }

    pub fn from_policies(group_id: GroupId, policies: Vec<ActorCriticNet>) -> Self {
        Self {
            group_id,
            policies,
            frozen: false,
            perf: WinRecord::default(),
        }
    }

    pub fn num_types(&self) -> usize {
        self.policies.len()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn policy(&self, d: usize) -> Result<&ActorCriticNet> {
        self.policies
            .get(d)
            .ok_or_else(|| Error::Contract(format!("group {} has no policy for type {d}", self.group_id)))
    }

    /// Mutable access for the learner; refused for frozen snapshots.
    pub fn policy_mut(&mut self, d: usize) -> Result<&mut ActorCriticNet> {
        if self.frozen {
            return Err(Error::Contract(format!("group {} is frozen", self.group_id)));
        }
        let id = self.group_id;
        self.policies
            .get_mut(d)
            .ok_or_else(|| Error::Contract(format!("group {id} has no policy for type {d}")))
    }

    pub fn policies(&self) -> &[ActorCriticNet] {
        &self.policies
    }

    /// Deep copy with `frozen = true`, a fresh id and empty counters.
    pub fn freeze(&self, new_id: GroupId) -> PolicyGroup {
        PolicyGroup {
            group_id: new_id,
            policies: self.policies.clone(),
            frozen: true,
            perf: WinRecord::default(),
        }
    }

    pub fn checksum(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for p in &self.policies {
            p.checksum().hash(&mut h);
        }
        h.finish()
    }

    /// Action for a single agent of type `d`.
    pub fn act(
        &self,
        d: usize,
        obs: &[f64],
        identity: &IdentityRep,
        mask: &[bool],
        rng: &mut impl Rng,
        mode: ActMode,
    ) -> Result<ActOutput> {
        let net = self.policy(d)?;
        let heads = net.head_cache(identity.as_slice())?;
        let out = self.act_batch(d, &Tensor2::row(obs), &heads, &[mask], rng, mode)?;
        Ok(out[0])
    }

    /// Actions for several agents of type `d` sharing the same identity.
    pub fn act_batch(
        &self,
        d: usize,
        obs: &Tensor2,
        heads: &HeadCache,
        masks: &[&[bool]],
        rng: &mut impl Rng,
        mode: ActMode,
    ) -> Result<Vec<ActOutput>> {
        if masks.len() != obs.rows() {
            return Err(Error::dim("act_batch masks", obs.rows(), masks.len()));
        }
        let (logits, values) = self.policy(d)?.forward(obs, heads)?;
        (0..obs.rows())
            .map(|r| {
                let (action, log_prob) = choose_action(logits.row_slice(r), masks[r], rng, mode)?;
                Ok(ActOutput {
                    action,
                    log_prob,
                    value: values.get(r, 0),
                })
            })
            .collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::new();
        for (d, p) in self.policies.iter().enumerate() {
            let (actor, critic) = (format!("type{d}.actor.bin"), format!("type{d}.critic.bin"));
            save_tensors(&dir.join(&actor), &p.actor.params)?;
            save_tensors(&dir.join(&critic), &p.critic.params)?;
            entries.push(PolicyEntry {
                shape: p.shape.clone(),
                actor,
                critic,
            });
        }
        let manifest = GroupManifest {
            group_id: self.group_id,
            frozen: self.frozen,
            perf: self.perf,
            policies: entries,
        };
        let path = dir.join("group.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("group.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: GroupManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "group manifest",
            detail: e.to_string(),
        })?;
        let policies = m
            .policies
            .into_iter()
            .map(|e| {
                let actor = load_tensors(&dir.join(&e.actor))?;
                let critic = load_tensors(&dir.join(&e.critic))?;
                ActorCriticNet::from_params(e.shape, actor, critic)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            group_id: m.group_id,
            policies,
            frozen: m.frozen,
            perf: m.perf,
        })
    }
}
