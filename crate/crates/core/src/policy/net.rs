//! Hypernetwork actor-critic for one agent type.
//!
//! Actor and critic are separate networks with the same layout: a tanh MLP
//! encoder over the observation, followed by a final layer whose weights are
//! generated from the identity vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{bind_params, Activation, GeneratedLayer, HyperLayer, Mlp, Tape, Tensor2, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    /// Encoder hidden widths.
    pub hidden: Vec<usize>,
    /// Width of the generator's hidden layer.
    pub hyper_hidden: usize,
    /// Scale of the generator's output layer at initialization.
    pub head_gain: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            hyper_hidden: 64,
            head_gain: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetShape {
    pub obs_len: usize,
    pub cond_len: usize,
    pub num_actions: usize,
    pub config: NetConfig,
}

/// Encoder plus hypernetwork head, owning its parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperNet {
    pub encoder: Mlp,
    pub head: HyperLayer,
    pub params: Vec<Tensor2>,
}

impl HyperNet {
    pub fn init(obs_len: usize, cond_len: usize, out: usize, cfg: &NetConfig, rng: &mut impl Rng) -> Self {
        let mut params = Vec::new();
        let mut sizes = vec![obs_len];
        sizes.extend(&cfg.hidden);
        let encoder = Mlp::init(&mut params, &sizes, Activation::Tanh, Activation::Tanh, rng);
        let feat = *sizes.last().expect("non-empty");
        let head = HyperLayer::init(
            &mut params,
            cond_len,
            cfg.hyper_hidden,
            feat,
            out,
            Activation::Linear,
            cfg.head_gain,
            rng,
        );
        Self { encoder, head, params }
    }

    /// Rebuilds the layout from `shape` and installs `params`, checking every shape.
    pub fn with_params(obs_len: usize, cond_len: usize, out: usize, cfg: &NetConfig, params: Vec<Tensor2>) -> Result<Self> {
        // Layout only depends on sizes, so a throwaway init gives the slot map.
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let mut net = Self::init(obs_len, cond_len, out, cfg, &mut rng);
        if net.params.len() != params.len() {
            return Err(Error::dim("HyperNet::with_params", net.params.len(), params.len()));
        }
        for (a, b) in net.params.iter().zip(&params) {
            if a.shape() != b.shape() {
                return Err(Error::dim("HyperNet::with_params", format!("{:?}", a.shape()), format!("{:?}", b.shape())));
            }
        }
        net.params = params;
        Ok(net)
    }

    pub fn generate(&self, cond: &[f64]) -> Result<GeneratedLayer> {
        self.head.generate(&self.params, cond)
    }

    pub fn forward(&self, obs: &Tensor2, cond: &[f64]) -> Result<Tensor2> {
        self.forward_generated(obs, &self.generate(cond)?)
    }

    /// Forward pass reusing head weights already generated for this conditioning.
    pub fn forward_generated(&self, obs: &Tensor2, head: &GeneratedLayer) -> Result<Tensor2> {
        head.forward(&self.encoder.forward(&self.params, obs)?)
    }

    pub fn record(&self, tape: &mut Tape, bound: &[Var], obs: Var, cond: Var) -> Result<Var> {
        let h = self.encoder.record(tape, bound, obs)?;
        self.head.record(tape, bound, cond, h)
    }

    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        bind_params(tape, &self.params)
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(Tensor2::len).sum()
    }
}

/// Actor producing logits over the type's actions, critic producing `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorCriticNet {
    pub shape: NetShape,
    pub actor: HyperNet,
    pub critic: HyperNet,
}

/// Head weights generated for one conditioning vector.
#[derive(Clone, Debug)]
pub struct HeadCache {
    pub actor: GeneratedLayer,
    pub critic: GeneratedLayer,
}

impl ActorCriticNet {
    pub fn init(shape: NetShape, rng: &mut impl Rng) -> Self {
        let actor = HyperNet::init(shape.obs_len, shape.cond_len, shape.num_actions, &shape.config, rng);
        let critic = HyperNet::init(shape.obs_len, shape.cond_len, 1, &shape.config, rng);
        Self { shape, actor, critic }
    }

    pub fn from_params(shape: NetShape, actor: Vec<Tensor2>, critic: Vec<Tensor2>) -> Result<Self> {
        let a = HyperNet::with_params(shape.obs_len, shape.cond_len, shape.num_actions, &shape.config, actor)?;
        let c = HyperNet::with_params(shape.obs_len, shape.cond_len, 1, &shape.config, critic)?;
        Ok(Self {
            shape,
            actor: a,
            critic: c,
        })
    }

    pub fn head_cache(&self, cond: &[f64]) -> Result<HeadCache> {
        Ok(HeadCache {
            actor: self.actor.generate(cond)?,
            critic: self.critic.generate(cond)?,
        })
    }

    /// Logits (`rows x num_actions`) and values (`rows x 1`).
    pub fn forward(&self, obs: &Tensor2, heads: &HeadCache) -> Result<(Tensor2, Tensor2)> {
        if obs.cols() != self.shape.obs_len {
            return Err(Error::dim("ActorCriticNet::forward", self.shape.obs_len, obs.cols()));
        }
        Ok((
            self.actor.forward_generated(obs, &heads.actor)?,
            self.critic.forward_generated(obs, &heads.critic)?,
        ))
    }

    /// Order-sensitive digest of every parameter bit.
    pub fn checksum(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for t in self.actor.params.iter().chain(&self.critic.params) {
            t.shape().hash(&mut h);
            for v in t.data() {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}
