use serde::{Deserialize, Serialize};

use super::{Gradients, NetworkModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        AdamState {
            step_count: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            config,
        }
    }

    pub fn for_network(model: &NetworkModel, config: AdamConfig) -> Self {
        Self::new(model.param_count(), config)
    }

    fn begin_step(&mut self) -> (f64, f64) {
        self.step_count += 1;
        let t = self.step_count as f64;
        (
            1.0 - self.config.beta1.powf(t),
            1.0 - self.config.beta2.powf(t),
        )
    }

    fn update(
        &mut self,
        offset: usize,
        params: &mut [f64],
        grads: &[f64],
        corr: (f64, f64),
    ) -> usize {
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let m = &mut self.first_moment[offset..offset + params.len()];
        let v = &mut self.second_moment[offset..offset + params.len()];
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / corr.0;
            let v_hat = *v / corr.1;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
        offset + params.len()
    }

    /// One update of a flat parameter vector.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.first_moment.len(),
                actual: params.len().min(grads.len()),
            });
        }
        let corr = self.begin_step();
        self.update(0, params, grads, corr);
        Ok(())
    }

    /// One update of every weight and bias of `model`, in place.
    pub fn step_network(&mut self, model: &mut NetworkModel, grads: &Gradients) -> Result<()> {
        let shapes_match = model.layers.len() == grads.layers.len()
            && model.layers.iter().zip(&grads.layers).all(|(l, g)| {
                l.weights.len() == g.weights.len() && l.biases.len() == g.biases.len()
            });
        if !shapes_match || model.param_count() != self.first_moment.len() {
            return Err(Error::InvalidArgument(
                "gradients and optimizer state do not match the network".into(),
            ));
        }
        let corr = self.begin_step();
        let mut offset = 0;
        for (layer, g) in model.layers.iter_mut().zip(&grads.layers) {
            offset = self.update(offset, &mut layer.weights, &g.weights, corr);
            offset = self.update(offset, &mut layer.biases, &g.biases, corr);
        }
        Ok(())
    }
}
