//! Dual-clip PPO with separate per-type actor and critic optimizers.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::learner::batch::{Batch, SampleGroup};
use crate::learner::config::LearnerConfig;
use crate::nn::checkpoint::{adam_from_tensors, adam_to_tensors, load_tensors, save_tensors};
use crate::nn::{clip_global_norm, Adam, Tape, Tensor2, Var};
use crate::policy::{ActorCriticNet, PolicyGroup};

/// Diagnostics from the final epoch of an update.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct LossReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_priority: f64,
    /// Largest pre-clip gradient norm over all networks and epochs.
    pub grad_norm: f64,
    /// Share of samples whose ratio left `[1 - ε, 1 + ε]`.
    pub clip_fraction: f64,
    pub samples: usize,
}

/// Actor objective pieces for one agent type.
#[derive(Clone, Debug)]
pub struct ActorObjective {
    pub loss: f64,
    pub surrogate_sum: f64,
    pub entropy_sum: f64,
    pub clipped: usize,
    pub grads: Vec<Tensor2>,
}

/// The per-sample dual-clip surrogate, for reference and tests.
pub fn dual_clip_surrogate(ratio: f64, weight: f64, eps: f64, dual: f64) -> f64 {
    let s = (ratio * weight).min(ratio.clamp(1.0 - eps, 1.0 + eps) * weight);
    if weight < 0.0 {
        s.max(dual * weight)
    } else {
        s
    }
}

fn record_actor_group(tape: &mut Tape, bound: &[Var], net: &ActorCriticNet, g: &SampleGroup, cfg: &LearnerConfig) -> Result<(Var, Var)> {
    let rows = g.len();
    let obs = tape.constant(g.observations.clone());
    let cond = tape.constant(Tensor2::row(&g.identity));
    let logits = net.actor.record(tape, bound, obs, cond)?;
    let logp_all = tape.masked_log_softmax(logits, &g.masks)?;
    let logp = tape.pick_column(logp_all, &g.actions)?;
    let old = tape.constant(Tensor2::column(&g.old_log_probs));
    let diff = tape.sub(logp, old)?;
    let ratio = tape.exp(diff);

    let w = g.weights();
    let wv = tape.constant(Tensor2::column(&w));
    let unclipped = tape.mul(ratio, wv)?;
    let clipped_ratio = tape.clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    let clipped = tape.mul(clipped_ratio, wv)?;
    let s = tape.min(unclipped, clipped)?;
    let floor = tape.constant(Tensor2::column(&w.iter().map(|x| cfg.dual_clip * x).collect::<Vec<_>>()));
    let dual = tape.max(s, floor)?;
    let neg: Vec<f64> = w.iter().map(|&x| if x < 0.0 { 1.0 } else { 0.0 }).collect();
    let pos = tape.constant(Tensor2::column(&neg.iter().map(|n| 1.0 - n).collect::<Vec<_>>()));
    let neg = tape.constant(Tensor2::column(&neg));
    let a = tape.mul(s, pos)?;
    let b = tape.mul(dual, neg)?;
    let surr = tape.add(a, b)?;
    let surr = tape.sum(surr);

    // Masked entries hold log p = 0, so p·log p vanishes there.
    let p = tape.exp(logp_all);
    let plogp = tape.mul(p, logp_all)?;
    let neg_h = tape.sum(plogp);
    debug_assert_eq!(tape.value(logp).rows(), rows);
    Ok((surr, neg_h))
}

/// Actor loss and its parameter gradient for one type's sample groups.
///
/// `loss = -(Σ surrogate + c_ent Σ H) / total`.
pub fn actor_objective(net: &ActorCriticNet, groups: &[SampleGroup], total: usize, cfg: &LearnerConfig) -> Result<ActorObjective> {
    let mut tape = Tape::new();
    let bound = net.actor.bind(&mut tape);
    let mut surr_total: Option<Var> = None;
    let mut negh_total: Option<Var> = None;
    let mut clipped = 0usize;
    for g in groups.iter().filter(|g| !g.is_empty()) {
        let (s, nh) = record_actor_group(&mut tape, &bound, net, g, cfg)?;
        surr_total = Some(match surr_total {
            Some(t) => tape.add(t, s)?,
            None => s,
        });
        negh_total = Some(match negh_total {
            Some(t) => tape.add(t, nh)?,
            None => nh,
        });
        clipped += count_clipped(net, g, cfg)?;
    }
    let (Some(surr), Some(negh)) = (surr_total, negh_total) else {
        return Ok(ActorObjective {
            loss: 0.0,
            surrogate_sum: 0.0,
            entropy_sum: 0.0,
            clipped: 0,
            grads: net.actor.params.iter().map(|p| Tensor2::zeros(p.rows(), p.cols())).collect(),
        });
    };
    let n = total.max(1) as f64;
    let a = tape.scale(surr, -1.0 / n);
    let b = tape.scale(negh, cfg.entropy_coef / n);
    let loss = tape.add(a, b)?;
    let value = tape.value(loss).get(0, 0);
    if !value.is_finite() {
        return Err(Error::Divergence {
            context: format!("actor loss {value}"),
        });
    }
    let grads = tape.backward(loss)?.dense_params(&net.actor.params);
    Ok(ActorObjective {
        loss: value,
        surrogate_sum: tape.value(surr).get(0, 0),
        entropy_sum: -tape.value(negh).get(0, 0),
        clipped,
        grads,
    })
}

fn count_clipped(net: &ActorCriticNet, g: &SampleGroup, cfg: &LearnerConfig) -> Result<usize> {
    // Recomputed outside the tape; cheap next to the backward sweep.
    let logits = net.actor.forward(&g.observations, &g.identity)?;
    let logp = crate::nn::masked_log_softmax(&logits, &g.masks)?;
    Ok((0..g.len())
        .filter(|&r| {
            let ratio = (logp.get(r, g.actions[r]) - g.old_log_probs[r]).exp();
            (ratio - 1.0).abs() > cfg.clip_epsilon
        })
        .count())
}

/// Critic loss `c_v Σ (V - R)² / total` and its gradient.
pub fn critic_objective(net: &ActorCriticNet, groups: &[SampleGroup], total: usize, cfg: &LearnerConfig) -> Result<(f64, Vec<Tensor2>)> {
    let mut tape = Tape::new();
    let bound = net.critic.bind(&mut tape);
    let mut acc: Option<Var> = None;
    for g in groups.iter().filter(|g| !g.is_empty()) {
        let obs = tape.constant(g.observations.clone());
        let cond = tape.constant(Tensor2::row(&g.identity));
        let v = net.critic.record(&mut tape, &bound, obs, cond)?;
        let ret = tape.constant(Tensor2::column(&g.returns));
        let d = tape.sub(v, ret)?;
        let sq = tape.square(d);
        let s = tape.sum(sq);
        acc = Some(match acc {
            Some(t) => tape.add(t, s)?,
            None => s,
        });
    }
    let Some(sum) = acc else {
        return Ok((0.0, net.critic.params.iter().map(|p| Tensor2::zeros(p.rows(), p.cols())).collect()));
    };
    let loss = tape.scale(sum, cfg.value_coef / total.max(1) as f64);
    let value = tape.value(loss).get(0, 0);
    if !value.is_finite() {
        return Err(Error::Divergence {
            context: format!("critic loss {value}"),
        });
    }
    Ok((value, tape.backward(loss)?.dense_params(&net.critic.params)))
}

/// Optimizer state for the frontier group.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoLearner {
    pub config: LearnerConfig,
    actor_opts: Vec<Adam>,
    critic_opts: Vec<Adam>,
}

impl PpoLearner {
    pub fn new(config: LearnerConfig, group: &PolicyGroup) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            actor_opts: group.policies().iter().map(|p| Adam::new(config.actor_lr, &p.actor.params)).collect(),
            critic_opts: group.policies().iter().map(|p| Adam::new(config.critic_lr, &p.critic.params)).collect(),
            config,
        })
    }

    /// Runs `ppo_epochs` passes over `batch`. With a nonzero minibatch size
    /// each pass is reshuffled with `rng`; otherwise `rng` is unused.
    pub fn update(&mut self, group: &mut PolicyGroup, batch: &Batch, rng: &mut impl Rng) -> Result<LossReport> {
        if batch.groups.len() != group.num_types() {
            return Err(Error::dim("PpoLearner::update", group.num_types(), batch.groups.len()));
        }
        let cfg = self.config.clone();
        let mut report = LossReport {
            mean_priority: batch.mean_priority(),
            samples: batch.num_samples,
            ..LossReport::default()
        };
        if batch.num_samples == 0 {
            return Ok(report);
        }
        for _ in 0..cfg.ppo_epochs {
            let parts = if cfg.minibatch_size == 0 || cfg.minibatch_size >= batch.num_samples {
                vec![batch.clone()]
            } else {
                batch.minibatches(cfg.minibatch_size, rng)
            };
            let (mut pl, mut vl, mut ent, mut clipped) = (0.0, 0.0, 0.0, 0usize);
            for part in &parts {
                let w = part.num_samples as f64 / batch.num_samples as f64;
                let (p, v, e, c) = self.step(group, part, &cfg, &mut report.grad_norm)?;
                pl += w * p;
                vl += w * v;
                ent += e;
                clipped += c;
            }
            report.policy_loss = pl;
            report.value_loss = vl;
            report.entropy = ent / batch.num_samples as f64;
            report.clip_fraction = clipped as f64 / batch.num_samples as f64;
        }
        Ok(report)
    }

    /// One gradient step per type on `part`. Returns policy loss, value
    /// loss, summed entropy and the clipped-sample count.
    fn step(&mut self, group: &mut PolicyGroup, part: &Batch, cfg: &LearnerConfig, max_norm: &mut f64) -> Result<(f64, f64, f64, usize)> {
        let total = part.num_samples;
        let (mut pl, mut vl, mut ent, mut clipped) = (0.0, 0.0, 0.0, 0usize);
        for (d, groups) in part.groups.iter().enumerate() {
            if groups.iter().all(SampleGroup::is_empty) {
                continue;
            }
            let net = group.policy_mut(d)?;
            let mut obj = actor_objective(net, groups, total, cfg)?;
            *max_norm = max_norm.max(clip_global_norm(&mut obj.grads, cfg.max_grad_norm));
            self.actor_opts[d].step(&mut net.actor.params, &obj.grads)?;
            let (v, mut cg) = critic_objective(net, groups, total, cfg)?;
            *max_norm = max_norm.max(clip_global_norm(&mut cg, cfg.max_grad_norm));
            self.critic_opts[d].step(&mut net.critic.params, &cg)?;
            pl += obj.loss;
            vl += v;
            ent += obj.entropy_sum;
            clipped += obj.clipped;
        }
        Ok((pl, vl, ent, clipped))
    }

    /// Writes `typeN.actor_opt.bin` and `typeN.critic_opt.bin` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (d, (a, c)) in self.actor_opts.iter().zip(&self.critic_opts).enumerate() {
            save_tensors(&dir.join(format!("type{d}.actor_opt.bin")), &adam_to_tensors(a))?;
            save_tensors(&dir.join(format!("type{d}.critic_opt.bin")), &adam_to_tensors(c))?;
        }
        Ok(())
    }

    pub fn load(config: LearnerConfig, dir: &Path, num_types: usize) -> Result<Self> {
        config.validate()?;
        let mut actor_opts = Vec::with_capacity(num_types);
        let mut critic_opts = Vec::with_capacity(num_types);
        for d in 0..num_types {
            actor_opts.push(adam_from_tensors(load_tensors(&dir.join(format!("type{d}.actor_opt.bin")))?)?);
            critic_opts.push(adam_from_tensors(load_tensors(&dir.join(format!("type{d}.critic_opt.bin")))?)?);
        }
        Ok(Self {
            config,
            actor_opts,
            critic_opts,
        })
    }
}
