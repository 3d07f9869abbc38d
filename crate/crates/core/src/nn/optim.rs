//! Adam with bias correction, plus global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<Tensor2>,
    second_moment: Vec<Tensor2>,
}

impl Adam {
    pub fn new(learning_rate: f64, params: &[Tensor2]) -> Self {
        let zeros = || params.iter().map(|p| Tensor2::zeros(p.rows(), p.cols())).collect();
        Self {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: zeros(),
            second_moment: zeros(),
        }
    }

    pub fn moments(&self) -> (&[Tensor2], &[Tensor2]) {
        (&self.first_moment, &self.second_moment)
    }

    pub(crate) fn restore_moments(&mut self, first: Vec<Tensor2>, second: Vec<Tensor2>) -> Result<()> {
        if first.len() != second.len() || first.iter().zip(&second).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::dim("Adam moments", first.len(), second.len()));
        }
        self.first_moment = first;
        self.second_moment = second;
        Ok(())
    }

    /// One bias-corrected update. Rejects non-finite gradients before touching any state.
    pub fn step(&mut self, params: &mut [Tensor2], grads: &[Tensor2]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::dim(
                "optimizer_step",
                format!("{} parameter tensors", self.first_moment.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.first_moment[i].shape() {
                return Err(Error::dim("optimizer_step", format!("{:?}", p.shape()), format!("{:?}", g.shape())));
            }
            if !g.is_finite() {
                return Err(Error::Divergence {
                    context: format!("non-finite gradient in parameter tensor {i}"),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            for (((pv, &gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *pv -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Global L2 norm across all tensors.
pub fn global_norm(grads: &[Tensor2]) -> f64 {
    grads.iter().map(Tensor2::squared_norm).sum::<f64>().sqrt()
}

/// Rescales `grads` so their global norm is at most `max_norm`; returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [Tensor2], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm.is_finite() && norm > max_norm {
        let k = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale_assign(k);
        }
    }
    norm
}
