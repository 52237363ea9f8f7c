//! Adam with L2 weight decay folded into the gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{HasParams, Scalar};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-9,
            weight_decay: 1e-5,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::Config("adam lr must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("adam betas must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Optimizer state: first/second moment buffers aligned with the model's
/// parameter visitation order, plus the step counter.
pub struct Adam<S> {
    cfg: AdamConfig,
    step: u64,
    moments: Vec<(Vec<S>, Vec<S>)>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(cfg: AdamConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Adam {
            cfg,
            step: 0,
            moments: Vec::new(),
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> &[(Vec<S>, Vec<S>)] {
        &self.moments
    }

    /// Restores optimizer state (step counter and moment buffers).
    pub fn restore(&mut self, step: u64, moments: Vec<(Vec<S>, Vec<S>)>) {
        self.step = step;
        self.moments = moments;
    }

    /// One update using the gradients currently stored in the parameters.
    pub fn step(&mut self, model: &mut dyn HasParams<S>) -> Result<()> {
        if self.moments.is_empty() {
            model.visit_params(&mut |p| {
                self.moments
                    .push((vec![S::ZERO; p.numel()], vec![S::ZERO; p.numel()]));
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let b1 = S::from_f64(self.cfg.beta1);
        let b2 = S::from_f64(self.cfg.beta2);
        let one_minus_b1 = S::from_f64(1.0 - self.cfg.beta1);
        let one_minus_b2 = S::from_f64(1.0 - self.cfg.beta2);
        let corr1 = S::from_f64(1.0 - self.cfg.beta1.powi(t));
        let corr2 = S::from_f64(1.0 - self.cfg.beta2.powi(t));
        let lr = S::from_f64(self.cfg.lr);
        let eps = S::from_f64(self.cfg.eps);
        let wd = S::from_f64(self.cfg.weight_decay);

        let mut idx = 0usize;
        let mut shape_err = None;
        let moments = &mut self.moments;
        model.visit_params_mut(&mut |p| {
            if idx >= moments.len() || moments[idx].0.len() != p.numel() {
                shape_err = Some(format!(
                    "optimizer state misaligned at parameter {} ({})",
                    idx, p.name
                ));
                idx += 1;
                return;
            }
            let (m, v) = &mut moments[idx];
            for i in 0..p.numel() {
                let g = p.grad[i] + wd * p.value[i];
                m[i] = b1 * m[i] + one_minus_b1 * g;
                v[i] = b2 * v[i] + one_minus_b2 * g * g;
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                p.value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            idx += 1;
        });
        match shape_err {
            Some(msg) => Err(Error::Shape(msg)),
            None => Ok(()),
        }
    }
}
