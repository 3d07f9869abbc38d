use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_epsilon: f64,
    pub dual_clip: f64,
    pub psi: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
    /// Optimization passes over each collected batch.
    pub ppo_epochs: usize,
    pub max_grad_norm: f64,
    /// Samples per gradient step; 0 takes one full-batch step per epoch.
    pub minibatch_size: usize,
    /// When false every sample's prioritization factor is 1.
    pub prioritize: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.98,
            clip_epsilon: 0.2,
            dual_clip: 3.0,
            psi: 0.5,
            entropy_coef: 0.0005,
            value_coef: 1.0,
            critic_lr: 0.004,
            actor_lr: 0.0004,
            ppo_epochs: 24,
            max_grad_norm: 10.0,
            minibatch_size: 0,
            prioritize: true,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.psi > 0.0 && self.psi < 1.0) {
            return bad("psi must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("gamma and lambda must lie in (0, 1]");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon must lie in (0, 1)");
        }
        if !(self.dual_clip > 1.0) {
            return bad("dual_clip must exceed 1");
        }
        if self.ppo_epochs == 0 {
            return bad("ppo_epochs must be at least 1");
        }
        for (name, v) in [
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
            ("critic_lr", self.critic_lr),
            ("actor_lr", self.actor_lr),
            ("max_grad_norm", self.max_grad_norm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}
