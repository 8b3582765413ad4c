//! AdamW with decoupled weight decay, and plain SGD.
//!
//! ```text
//! θ ← θ (1 − lr λ)
//! m ← β1 m + (1 − β1) g
//! v ← β2 v + (1 − β2) g²
//! θ ← θ − lr m̂ / (√v̂ + ε),   m̂ = m / (1 − β1^t),  v̂ = v / (1 − β2^t)
//! ```

use serde::{Deserialize, Serialize};

use super::config::OptimizerKind;
use crate::domain::Param;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub lr: f64,
    pub kind: OptimizerKind,
}

impl OptimState {
    /// Zeroed moments congruent to `params`.
    pub fn new(params: &[Param], lr: f64, kind: OptimizerKind) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.values.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            lr,
            kind,
        }
    }

    pub fn is_congruent(&self, params: &[Param]) -> bool {
        self.m.len() == params.len()
            && self.v.len() == params.len()
            && params
                .iter()
                .zip(self.m.iter().zip(&self.v))
                .all(|(p, (m, v))| m.len() == p.values.len() && v.len() == p.values.len())
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut [Param], grads: &[Vec<f64>]) -> Result<()> {
        if grads.len() != params.len()
            || grads.iter().zip(params.iter()).any(|(g, p)| g.len() != p.values.len())
            || !self.is_congruent(params)
        {
            return Err(Error::Shape("gradients or optimizer state not congruent to params".into()));
        }
        for (g, p) in grads.iter().zip(params.iter()) {
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of {:?}[{i}] is {} at optimizer step {}",
                    p.name,
                    g[i],
                    self.t + 1
                )));
            }
        }
        self.t += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (theta, gi) in p.values.iter_mut().zip(g) {
                        *theta -= lr * gi;
                    }
                }
            }
            OptimizerKind::AdamW {
                beta1,
                beta2,
                eps,
                weight_decay,
            } => {
                let t = self.t as i32;
                let bias1 = 1.0 - beta1.powi(t);
                let bias2 = 1.0 - beta2.powi(t);
                let decay = 1.0 - lr * weight_decay;
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    for i in 0..g.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        let m_hat = m[i] / bias1;
                        let v_hat = v[i] / bias2;
                        p.values[i] = p.values[i] * decay - lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Functional form of one AdamW/SGD update: returns new params and state.
pub fn adamw_step(params: &[Param], grads: &[Vec<f64>], state: &OptimState) -> Result<(Vec<Param>, OptimState)> {
    let mut params = params.to_vec();
    let mut state = state.clone();
    state.step(&mut params, grads)?;
    Ok((params, state))
}
