use serde::{Deserialize, Serialize};

use super::{Gradients, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected adaptive moment estimation, no weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: Parameters,
    v: Parameters,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, like: &Parameters) -> Self {
        let zeros = Parameters::zeros(like.input_dim(), like.hidden_dim());
        Adam {
            config,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &Parameters {
        &self.m
    }

    pub fn second_moment(&self) -> &Parameters {
        &self.v
    }

    pub fn step(&mut self, params: &mut Parameters, grads: &Gradients) {
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        let ms = self.m.matrices_mut();
        let vs = self.v.matrices_mut();
        for (((p, g), m), v) in params
            .matrices_mut()
            .into_iter()
            .zip(grads.matrices())
            .zip(ms)
            .zip(vs)
        {
            for (((pi, &gi), mi), vi) in p
                .iter_mut()
                .zip(g.iter())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *pi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
