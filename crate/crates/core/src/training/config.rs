use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    AdamW {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_weight_decay")]
        weight_decay: f64,
    },
    /// Plain gradient descent, `θ ← θ − lr ∇θ`.
    Sgd,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}
fn default_weight_decay() -> f64 {
    0.01
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::AdamW {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            weight_decay: default_weight_decay(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub shuffle: bool,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            lr: 1e-4,
            seed: 0,
            shuffle: true,
            optimizer: OptimizerKind::default(),
        }
    }
}

impl TrainConfig {
    pub fn findings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.epochs == 0 {
            out.push("epochs must be >= 1".to_string());
        }
        if self.batch_size == 0 {
            out.push("batch_size must be >= 1".to_string());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            out.push(format!("learning rate {} must be finite and >= 0", self.lr));
        }
        if let OptimizerKind::AdamW { beta1, beta2, eps, weight_decay } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                out.push("AdamW betas must lie in [0, 1)".to_string());
            }
            if !(eps > 0.0) || !(weight_decay >= 0.0) {
                out.push("AdamW eps must be > 0 and weight_decay >= 0".to_string());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let findings = self.findings();
        if findings.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(findings.join("; ")))
        }
    }
}

/// Mixes a base seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
