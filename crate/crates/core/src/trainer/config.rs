use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// PPO hyperparameters and rollout geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub lr: f64,
    /// Steps per env per rollout (T).
    pub rollout_len: usize,
    pub epochs: usize,
    pub minibatches: usize,
    /// Parallel environments (N).
    pub num_envs: usize,
    pub total_timesteps: u64,
    pub reward_normalization: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.999,
            lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            lr: 5e-4,
            rollout_len: 256,
            epochs: 3,
            minibatches: 8,
            num_envs: 64,
            total_timesteps: 2_000_000,
            reward_normalization: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn batch_size(&self) -> usize {
        self.rollout_len * self.num_envs
    }

    pub fn minibatch_size(&self) -> usize {
        self.batch_size() / self.minibatches
    }

    /// Rollout/update cycles needed to cover `total_timesteps` (rounded up).
    pub fn num_updates(&self) -> u64 {
        self.total_timesteps.div_ceil(self.batch_size() as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1]"));
            }
        }
        for (name, v) in [
            ("clip", self.clip),
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
            ("lr", self.lr),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        for (name, v) in [
            ("rollout_len", self.rollout_len),
            ("epochs", self.epochs),
            ("minibatches", self.minibatches),
            ("num_envs", self.num_envs),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.batch_size() % self.minibatches != 0 {
            return bad(format!(
                "rollout_len * num_envs = {} is not divisible by minibatches = {}",
                self.batch_size(),
                self.minibatches
            ));
        }
        if self.total_timesteps == 0 {
            return bad("total_timesteps must be at least 1".into());
        }
        Ok(())
    }
}
