//! Adam with bias-corrected moment estimates.

use crate::error::{Error, Result};
use crate::param::Trainable;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One elementwise update at step `t >= 1`:
/// `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`, `p ← p − lr·m̂/(√v̂ + ε)`.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    let n = params.len();
    for (op, len) in [("adam_step grads", grads.len()), ("adam_step m", m.len()), ("adam_step v", v.len())] {
        if len != n {
            return Err(Error::Length { op, left: len, right: n });
        }
    }
    if t == 0 {
        return Err(Error::invalid("adam_step: t starts at 1"));
    }
    let b1 = T::lit(cfg.beta1);
    let b2 = T::lit(cfg.beta2);
    let c1 = T::one() - T::lit(cfg.beta1.powf(t as f64));
    let c2 = T::one() - T::lit(cfg.beta2.powf(t as f64));
    let lr = T::lit(cfg.learning_rate);
    let eps = T::lit(cfg.eps);
    for i in 0..n {
        let g = grads[i];
        m[i] = b1 * m[i] + (T::one() - b1) * g;
        v[i] = b2 * v[i] + (T::one() - b2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Optimizer state for every buffer of a [`Trainable`], in visiting order.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    cfg: AdamConfig,
    moments: Vec<(Vec<T>, Vec<T>)>,
    t: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            moments: Vec::new(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, model: &mut dyn Trainable<T>) -> Result<()> {
        self.t += 1;
        let t = self.t;
        let cfg = self.cfg;
        let moments = &mut self.moments;
        let mut index = 0;
        let mut result = Ok(());
        model.visit_params(&mut |p, g| {
            if index == moments.len() {
                moments.push((vec![T::zero(); p.len()], vec![T::zero(); p.len()]));
            }
            let (m, v) = &mut moments[index];
            if result.is_ok() {
                result = adam_step(p, g, m, v, &cfg, t);
            }
            index += 1;
        });
        result
    }
}
