//! Trajectories and the prepared training batch.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::learner::advantage::{gae, normalize_advantages, priority_factor};
use crate::learner::config::LearnerConfig;
use crate::league::{BetaStats, MixedCombination};
use crate::nn::Tensor2;

/// One agent's decision at one tick.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub identity: Vec<f64>,
    pub mask: Vec<bool>,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// The steps of one agent over one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentTrajectory {
    pub agent_type: usize,
    pub combination: MixedCombination,
    /// Steps chosen by a frozen league policy; these never enter the loss.
    pub league_controlled: bool,
    pub steps: Vec<Step>,
    /// Ticks between the agent's last step and the end of the episode. An
    /// agent that dies early waits out the episode in an absorbing state, so
    /// its share of the team reward is discounted by `γ^terminal_delay`.
    pub terminal_delay: u32,
}

impl AgentTrajectory {
    pub fn validate(&self) -> Result<()> {
        for (t, s) in self.steps.iter().enumerate() {
            let last = t + 1 == self.steps.len();
            if !last && (s.done || s.reward != 0.0) {
                return Err(Error::Contract(format!("non-terminal step {t} carries reward or done")));
            }
            if !s.log_prob.is_finite() {
                return Err(Error::Contract(format!("step {t} has non-finite log_prob")));
            }
        }
        Ok(())
    }
}

/// Samples of one agent type that share an identity vector, stored as
/// matrices ready for a batched forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGroup {
    pub identity: Vec<f64>,
    pub observations: Tensor2,
    /// Row-major `rows x num_actions`.
    pub masks: Vec<bool>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    /// Normalized GAE advantages.
    pub advantages: Vec<f64>,
    pub priorities: Vec<f64>,
    pub returns: Vec<f64>,
    /// Replaced type of the episode each sample came from.
    pub replaced: Vec<Option<usize>>,
}

impl SampleGroup {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// The listed rows as a new group.
    pub fn select(&self, rows: &[usize]) -> SampleGroup {
        let a = self.masks.len() / self.len().max(1);
        let obs: Vec<f64> = rows.iter().flat_map(|&r| self.observations.row_slice(r).iter().copied()).collect();
        SampleGroup {
            identity: self.identity.clone(),
            observations: Tensor2::new(rows.len(), self.observations.cols(), obs).expect("row count matches"),
            masks: rows.iter().flat_map(|&r| self.masks[r * a..(r + 1) * a].iter().copied()).collect(),
            actions: rows.iter().map(|&r| self.actions[r]).collect(),
            old_log_probs: rows.iter().map(|&r| self.old_log_probs[r]).collect(),
            advantages: rows.iter().map(|&r| self.advantages[r]).collect(),
            priorities: rows.iter().map(|&r| self.priorities[r]).collect(),
            returns: rows.iter().map(|&r| self.returns[r]).collect(),
            replaced: rows.iter().map(|&r| self.replaced[r]).collect(),
        }
    }

    /// Per-sample surrogate weight `A_GAE · A_β`.
    pub fn weights(&self) -> Vec<f64> {
        self.advantages.iter().zip(&self.priorities).map(|(a, p)| a * p).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    /// Indexed by agent type.
    pub groups: Vec<Vec<SampleGroup>>,
    pub num_samples: usize,
    /// Raw (pre-normalization) advantages, for diagnostics.
    pub raw_advantage_mean: f64,
}

impl Batch {
    /// Computes GAE per frontier trajectory, standardizes all advantages of
    /// the batch together, then attaches each episode's prioritization factor.
    pub fn build(trajectories: &[AgentTrajectory], num_types: usize, stats: &BetaStats, cfg: &LearnerConfig) -> Result<Batch> {
        struct Flat<'a> {
            step: &'a Step,
            ty: usize,
            replaced: Option<usize>,
            priority: f64,
            ret: f64,
        }
        let mut flat = Vec::new();
        let mut adv = Vec::new();
        for tr in trajectories.iter().filter(|t| !t.league_controlled && !t.steps.is_empty()) {
            tr.validate()?;
            if tr.agent_type >= num_types {
                return Err(Error::Contract(format!("trajectory type {} out of range", tr.agent_type)));
            }
            let mut rewards: Vec<f64> = tr.steps.iter().map(|s| s.reward).collect();
            if let Some(last) = rewards.last_mut() {
                *last *= cfg.gamma.powi(tr.terminal_delay as i32);
            }
            let mut values: Vec<f64> = tr.steps.iter().map(|s| s.value).collect();
            values.push(0.0);
            let (a, r) = gae(&rewards, &values, cfg.gamma, cfg.lambda)?;
            let priority = if cfg.prioritize {
                priority_factor(stats, tr.combination.replaced_type, cfg.psi)
            } else {
                1.0
            };
            for ((step, a), ret) in tr.steps.iter().zip(a).zip(r) {
                adv.push(a);
                flat.push(Flat {
                    step,
                    ty: tr.agent_type,
                    replaced: tr.combination.replaced_type,
                    priority,
                    ret,
                });
            }
        }
        let raw_advantage_mean = if adv.is_empty() { 0.0 } else { adv.iter().sum::<f64>() / adv.len() as f64 };
        normalize_advantages(&mut adv);

        let mut keyed: Vec<BTreeMap<Vec<u64>, Vec<usize>>> = vec![BTreeMap::new(); num_types];
        for (i, f) in flat.iter().enumerate() {
            let key = f.step.identity.iter().map(|v| v.to_bits()).collect();
            keyed[f.ty].entry(key).or_default().push(i);
        }
        let mut groups = vec![Vec::new(); num_types];
        for (ty, by_id) in keyed.into_iter().enumerate() {
            for idx in by_id.into_values() {
                let first = flat[idx[0]].step;
                let rows: Vec<Vec<f64>> = idx.iter().map(|&i| flat[i].step.observation.clone()).collect();
                groups[ty].push(SampleGroup {
                    identity: first.identity.clone(),
                    observations: Tensor2::from_rows(&rows)?,
                    masks: idx.iter().flat_map(|&i| flat[i].step.mask.iter().copied()).collect(),
                    actions: idx.iter().map(|&i| flat[i].step.action).collect(),
                    old_log_probs: idx.iter().map(|&i| flat[i].step.log_prob).collect(),
                    advantages: idx.iter().map(|&i| adv[i]).collect(),
                    priorities: idx.iter().map(|&i| flat[i].priority).collect(),
                    returns: idx.iter().map(|&i| flat[i].ret).collect(),
                    replaced: idx.iter().map(|&i| flat[i].replaced).collect(),
                });
            }
        }
        Ok(Batch {
            groups,
            num_samples: flat.len(),
            raw_advantage_mean,
        })
    }

    /// Mean `|A_GAE · A_β|` over samples from episodes whose replaced type is `d`.
    pub fn mean_abs_weight_for_replaced(&self, d: usize) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for g in self.groups.iter().flatten() {
            for (w, r) in g.weights().iter().zip(&g.replaced) {
                if *r == Some(d) {
                    sum += w.abs();
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Splits the batch into shuffled minibatches of at most `size` samples.
    pub fn minibatches(&self, size: usize, rng: &mut impl rand::Rng) -> Vec<Batch> {
        use rand::seq::SliceRandom;
        let mut index: Vec<(usize, usize, usize)> = Vec::with_capacity(self.num_samples);
        for (d, groups) in self.groups.iter().enumerate() {
            for (g, group) in groups.iter().enumerate() {
                index.extend((0..group.len()).map(|r| (d, g, r)));
            }
        }
        index.shuffle(rng);
        index
            .chunks(size.max(1))
            .map(|chunk| {
                let mut rows: Vec<Vec<Vec<usize>>> = self.groups.iter().map(|gs| vec![Vec::new(); gs.len()]).collect();
                for &(d, g, r) in chunk {
                    rows[d][g].push(r);
                }
                let groups = rows
                    .iter()
                    .enumerate()
                    .map(|(d, per)| {
                        per.iter()
                            .enumerate()
                            .filter(|(_, r)| !r.is_empty())
                            .map(|(g, r)| self.groups[d][g].select(r))
                            .collect()
                    })
                    .collect();
                Batch {
                    groups,
                    num_samples: chunk.len(),
                    raw_advantage_mean: self.raw_advantage_mean,
                }
            })
            .collect()
    }

    pub fn mean_priority(&self) -> f64 {
        let (s, n) = self
            .groups
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, n), g| (s + g.priorities.iter().sum::<f64>(), n + g.len()));
        if n == 0 {
            1.0
        } else {
            s / n as f64
        }
    }
}
