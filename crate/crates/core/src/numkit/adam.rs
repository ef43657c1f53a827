use serde::{Deserialize, Serialize};

use super::{Gradients, Matrix, MlpModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for a fixed list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[(usize, usize)]) -> Result<Self> {
        if !(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 && config.beta2 < 1.0) {
            return Err(Error::contract(format!(
                "Adam decay rates must lie in (0,1): beta1={}, beta2={}",
                config.beta1, config.beta2
            )));
        }
        let zeros: Vec<Matrix> = shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect();
        Ok(Self {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        })
    }

    /// State shaped for `model`, ordered weights first, then biases.
    pub fn for_model(config: AdamConfig, model: &MlpModel) -> Result<Self> {
        let shapes: Vec<_> = model
            .weights()
            .iter()
            .chain(model.biases())
            .map(Matrix::shape)
            .collect();
        Self::new(config, &shapes)
    }

    /// One update over `params`, paired index-wise with `grads`.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape(
                "adam_step",
                format!(
                    "{} params / {} grads for a state of {} tensors",
                    params.len(),
                    grads.len(),
                    self.m.len()
                ),
            ));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[k].shape() {
                return Err(Error::shape(
                    format!("adam_step tensor {k}"),
                    format!(
                        "param {:?}, grad {:?}, state {:?}",
                        p.shape(),
                        g.shape(),
                        self.m[k].shape()
                    ),
                ));
            }
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Applies one Adam step to every weight and bias of `model`.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let (weights, biases) = model.params_mut();
    let mut params: Vec<&mut Matrix> = weights.iter_mut().chain(biases.iter_mut()).collect();
    let g: Vec<&Matrix> = grads.weights.iter().chain(&grads.biases).collect();
    state.step(&mut params, &g)
}
