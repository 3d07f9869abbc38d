//! Dense and hypernetwork layers over a flat parameter list.
//!
//! Layers do not own their weights. They hold indices into a `Vec<Tensor2>`
//! owned by the enclosing network, so a whole network can be checkpointed,
//! optimized or bound to a tape as one list.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Linear,
    Tanh,
}

impl Activation {
    fn apply(self, t: &mut Tensor2) {
        if self == Activation::Tanh {
            for v in t.data_mut() {
                *v = v.tanh();
            }
        }
    }

    fn record(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Linear => x,
            Activation::Tanh => tape.tanh(x),
        }
    }
}

/// Binds every parameter of a list to leaves on `tape`, in order.
pub fn bind_params(tape: &mut Tape, params: &[Tensor2]) -> Vec<Var> {
    params.iter().enumerate().map(|(i, p)| tape.param(i, p)).collect()
}

fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor2::new(rows, cols, data).expect("sized by construction")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
    weight: usize,
    bias: usize,
}

impl Dense {
    /// Appends a fresh `input x output` weight and `1 x output` bias to
    /// `params`, drawn uniformly from `±gain/sqrt(input)`.
    pub fn init(
        params: &mut Vec<Tensor2>,
        input: usize,
        output: usize,
        activation: Activation,
        gain: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = gain / (input.max(1) as f64).sqrt();
        params.push(uniform(input, output, bound, rng));
        params.push(uniform(1, output, bound, rng));
        Self {
            input,
            output,
            activation,
            weight: params.len() - 2,
            bias: params.len() - 1,
        }
    }

    /// Wraps existing parameter slots.
    pub fn from_slots(params: &[Tensor2], weight: usize, bias: usize, activation: Activation) -> Result<Self> {
        let w = params.get(weight).ok_or_else(|| Error::Contract(format!("no weight slot {weight}")))?;
        let b = params.get(bias).ok_or_else(|| Error::Contract(format!("no bias slot {bias}")))?;
        if b.shape() != (1, w.cols()) {
            return Err(Error::dim("Dense::from_slots", format!("(1, {})", w.cols()), format!("{:?}", b.shape())));
        }
        Ok(Self {
            input: w.rows(),
            output: w.cols(),
            activation,
            weight,
            bias,
        })
    }

    pub fn weight_slot(&self) -> usize {
        self.weight
    }

    pub fn bias_slot(&self) -> usize {
        self.bias
    }

    pub fn forward(&self, params: &[Tensor2], input: &Tensor2) -> Result<Tensor2> {
        if input.cols() != self.input {
            return Err(Error::dim("forward_dense", self.input, input.cols()));
        }
        let mut out = input.matmul(&params[self.weight])?;
        out.add_row_broadcast(params[self.bias].data());
        self.activation.apply(&mut out);
        Ok(out)
    }

    pub fn record(&self, tape: &mut Tape, bound: &[Var], input: Var) -> Result<Var> {
        let cols = tape.value(input).cols();
        if cols != self.input {
            return Err(Error::dim("forward_dense", self.input, cols));
        }
        let z = tape.matmul(input, bound[self.weight])?;
        let z = tape.add_bias(z, bound[self.bias])?;
        Ok(self.activation.record(tape, z))
    }
}

/// A stack of dense layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn init(
        params: &mut Vec<Tensor2>,
        sizes: &[usize],
        hidden: Activation,
        last: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let n = sizes.len().saturating_sub(1);
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { last } else { hidden };
                Dense::init(params, sizes[i], sizes[i + 1], act, 1.0, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn input(&self) -> usize {
        self.layers.first().map_or(0, |l| l.input)
    }

    pub fn output(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output)
    }

    pub fn forward(&self, params: &[Tensor2], input: &Tensor2) -> Result<Tensor2> {
        let mut x = input.clone();
        for l in &self.layers {
            x = l.forward(params, &x)?;
        }
        Ok(x)
    }

    pub fn record(&self, tape: &mut Tape, bound: &[Var], input: Var) -> Result<Var> {
        self.layers.iter().try_fold(input, |x, l| l.record(tape, bound, x))
    }
}

/// Dense layer whose weights and bias are produced by a generator network
/// from a conditioning vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperLayer {
    pub generator: Mlp,
    pub target_in: usize,
    pub target_out: usize,
    pub activation: Activation,
}

/// Target-layer weights produced for one conditioning vector.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedLayer {
    pub weight: Tensor2,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl GeneratedLayer {
    pub fn forward(&self, input: &Tensor2) -> Result<Tensor2> {
        if input.cols() != self.weight.rows() {
            return Err(Error::dim("forward_hyper", self.weight.rows(), input.cols()));
        }
        let mut out = input.matmul(&self.weight)?;
        out.add_row_broadcast(&self.bias);
        self.activation.apply(&mut out);
        Ok(out)
    }
}

impl HyperLayer {
    /// Generator `cond -> hidden (tanh) -> in*out + out (linear)`. The last
    /// generator layer is scaled by `out_gain` so initial generated weights stay small.
    pub fn init(
        params: &mut Vec<Tensor2>,
        cond: usize,
        hidden: usize,
        target_in: usize,
        target_out: usize,
        activation: Activation,
        out_gain: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let h = Dense::init(params, cond, hidden, Activation::Tanh, 1.0, rng);
        let o = Dense::init(
            params,
            hidden,
            target_in * target_out + target_out,
            Activation::Linear,
            out_gain,
            rng,
        );
        Self {
            generator: Mlp { layers: vec![h, o] },
            target_in,
            target_out,
            activation,
        }
    }

    pub fn cond_len(&self) -> usize {
        self.generator.input()
    }

    fn check(&self) -> Result<()> {
        let want = self.target_in * self.target_out + self.target_out;
        if self.generator.output() != want {
            return Err(Error::dim("HyperLayer", want, self.generator.output()));
        }
        Ok(())
    }

    pub fn generate(&self, params: &[Tensor2], cond: &[f64]) -> Result<GeneratedLayer> {
        self.check()?;
        if cond.len() != self.cond_len() {
            return Err(Error::dim("forward_hyper conditioning", self.cond_len(), cond.len()));
        }
        let flat = self.generator.forward(params, &Tensor2::row(cond))?.into_data();
        let split = self.target_in * self.target_out;
        Ok(GeneratedLayer {
            weight: Tensor2::new(self.target_in, self.target_out, flat[..split].to_vec())?,
            bias: flat[split..].to_vec(),
            activation: self.activation,
        })
    }

    pub fn forward(&self, params: &[Tensor2], cond: &[f64], input: &Tensor2) -> Result<Tensor2> {
        if input.cols() != self.target_in {
            return Err(Error::dim("forward_hyper", self.target_in, input.cols()));
        }
        self.generate(params, cond)?.forward(input)
    }

    /// Records generator and target layer so gradients reach both the
    /// generator parameters and the input.
    pub fn record(&self, tape: &mut Tape, bound: &[Var], cond: Var, input: Var) -> Result<Var> {
        self.check()?;
        if tape.value(cond).shape() != (1, self.cond_len()) {
            return Err(Error::dim(
                "forward_hyper conditioning",
                format!("(1, {})", self.cond_len()),
                format!("{:?}", tape.value(cond).shape()),
            ));
        }
        if tape.value(input).cols() != self.target_in {
            return Err(Error::dim("forward_hyper", self.target_in, tape.value(input).cols()));
        }
        let flat = self.generator.record(tape, bound, cond)?;
        let w = tape.slice_reshape(flat, 0, self.target_in, self.target_out)?;
        let b = tape.slice_reshape(flat, self.target_in * self.target_out, 1, self.target_out)?;
        let z = tape.matmul(input, w)?;
        let z = tape.add_bias(z, b)?;
        Ok(self.activation.record(tape, z))
    }
}
