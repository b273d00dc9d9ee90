use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn bad(key: &str, message: &str) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

/// How spatial coordinates enter the networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Embedding {
    /// `x / pi`.
    Raw,
    /// `(sin x, cos x)` per axis; periodic by construction.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSpec {
    pub width: usize,
    /// Number of hidden layers.
    pub depth: usize,
    pub embedding: Embedding,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self { width: 16, depth: 2, embedding: Embedding::Periodic }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.width > 512 {
            return Err(bad("network.width", "must be in 1..=512"));
        }
        if self.depth == 0 || self.depth > 16 {
            return Err(bad("network.depth", "must be in 1..=16"));
        }
        Ok(())
    }
}

/// Velocity measure used for the `v` integrals of the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocitySampling {
    /// Quadrature weights of the velocity grid.
    Grid,
    /// Monte Carlo, uniform on the velocity box.
    Uniform,
    /// Monte Carlo with a truncated Gaussian proposal.
    Maxwellian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollocationConfig {
    pub n_interior: usize,
    pub n_initial: usize,
    pub n_boundary: usize,
    pub velocity: VelocitySampling,
    /// Velocity samples for the Monte Carlo options.
    pub n_velocity: usize,
    /// Draw a fresh batch every this many steps; 0 keeps the first batch.
    pub resample_every: usize,
}

impl Default for CollocationConfig {
    fn default() -> Self {
        Self {
            n_interior: 48,
            n_initial: 32,
            n_boundary: 8,
            velocity: VelocitySampling::Grid,
            n_velocity: 512,
            resample_every: 50,
        }
    }
}

impl CollocationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_interior == 0 {
            return Err(bad("collocation.n_interior", "batch must be nonempty"));
        }
        if self.n_initial == 0 {
            return Err(bad("collocation.n_initial", "batch must be nonempty"));
        }
        if self.n_boundary == 0 {
            return Err(bad("collocation.n_boundary", "batch must be nonempty"));
        }
        if self.velocity != VelocitySampling::Grid && self.n_velocity == 0 {
            return Err(bad("collocation.n_velocity", "Monte Carlo sampling needs samples"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// Step of the central differences giving the `grad_x` residual terms.
    pub fd_step: f64,
    /// Include the `grad_x` and `grad_v` terms.
    pub h1: bool,
    /// Number of batch shards evaluated independently and summed in order.
    pub shards: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { fd_step: 1e-3, h1: true, shards: 1 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step.is_finite() && self.fd_step > 0.0 && self.fd_step < 0.5) {
            return Err(bad("loss.fd_step", "must be in (0, 0.5)"));
        }
        if self.shards == 0 {
            return Err(bad("loss.shards", "need at least one shard"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    /// Learning rate reached at the last step by exponential decay.
    pub lr_final: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub log_every: usize,
    /// Zero disables checkpoints.
    pub checkpoint_every: usize,
    pub diverge_at: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            lr: 1e-3,
            lr_final: None,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            log_every: 100,
            checkpoint_every: 500,
            diverge_at: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(bad("training.lr", "must be non-negative"));
        }
        if let Some(f) = self.lr_final {
            if !(f.is_finite() && f > 0.0 && self.lr > 0.0) {
                return Err(bad("training.lr_final", "must be positive with a positive lr"));
            }
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(bad("training.beta1", "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(bad("training.beta2", "must be in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(bad("training.adam_eps", "must be positive"));
        }
        if self.log_every == 0 {
            return Err(bad("training.log_every", "must be positive"));
        }
        if !(self.diverge_at > 0.0) {
            return Err(bad("training.diverge_at", "must be positive"));
        }
        Ok(())
    }

    /// Learning rate at `step` (0-based).
    pub fn lr_at(&self, step: usize) -> f64 {
        match self.lr_final {
            Some(f) if self.steps > 1 => {
                let s = step as f64 / (self.steps - 1) as f64;
                self.lr * (f / self.lr).powf(s)
            }
            _ => self.lr,
        }
    }
}
