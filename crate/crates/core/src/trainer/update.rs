use serde::{Deserialize, Serialize};

use crate::numkit::{backward, AdamState, LossBatch, LossCoefs, ParamSet, RngStream};
use crate::{Error, Result};

use super::config::TrainConfig;
use super::rollout::RolloutBuffer;

/// Loss diagnostics averaged over all minibatch steps of one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// max |ρ − 1| on the first minibatch, before any parameter change
    pub initial_ratio_dev: f64,
    pub minibatch_steps: usize,
}

/// Normalize to mean 0, std 1 (population std). Single samples become 0.
pub fn normalize_advantages(adv: &mut [f32]) {
    let n = adv.len() as f64;
    let mean = adv.iter().map(|&a| a as f64).sum::<f64>() / n;
    let var = adv.iter().map(|&a| (a as f64 - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for a in adv {
        *a = ((*a as f64 - mean) / std) as f32;
    }
}

/// Clipped-surrogate PPO: `epochs` passes over a seeded shuffle of the
/// buffer, one Adam step per minibatch.
pub fn ppo_update(
    params: &mut ParamSet<f32>,
    adam: &mut AdamState<f32>,
    buf: &RolloutBuffer,
    advantages: &[f32],
    targets: &[f32],
    config: &TrainConfig,
    rng: &mut RngStream,
) -> Result<UpdateStats> {
    let total = buf.len();
    if advantages.len() != total || targets.len() != total {
        return Err(Error::Shape(format!(
            "{} advantages / {} targets for a buffer of {total}",
            advantages.len(),
            targets.len()
        )));
    }
    if total % config.minibatches != 0 {
        return Err(Error::Config(format!(
            "buffer of {total} not divisible into {} minibatches",
            config.minibatches
        )));
    }
    let arch = *params.arch();
    let mb = total / config.minibatches;
    let coefs = LossCoefs {
        clip: config.clip,
        value_coef: config.value_coef,
        entropy_coef: config.entropy_coef,
        scale: 1.0,
    };
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..total).collect();
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        for idx in order.chunks(mb) {
            let input = buf.input(&arch, idx);
            let actions: Vec<usize> = idx.iter().map(|&i| buf.actions[i]).collect();
            let old: Vec<f32> = idx.iter().map(|&i| buf.log_probs[i]).collect();
            let mut adv: Vec<f32> = idx.iter().map(|&i| advantages[i]).collect();
            let tgt: Vec<f32> = idx.iter().map(|&i| targets[i]).collect();
            normalize_advantages(&mut adv);
            let batch = LossBatch {
                input: &input,
                actions: &actions,
                old_log_probs: &old,
                advantages: &adv,
                targets: &tgt,
            };
            let (grads, s) = backward(params, &batch, &coefs).map_err(|e| {
                Error::NonFinite(format!("{e} at minibatch step {} (adam t = {})", stats.minibatch_steps, adam.t))
            })?;
            if stats.minibatch_steps == 0 {
                stats.initial_ratio_dev = s.max_ratio_dev;
            }
            adam.update(params, &grads)?;
            stats.policy_loss += s.policy_loss;
            stats.value_loss += s.value_loss;
            stats.entropy += s.entropy;
            stats.approx_kl += s.approx_kl;
            stats.clip_fraction += s.clip_fraction;
            stats.minibatch_steps += 1;
        }
    }
    let k = stats.minibatch_steps.max(1) as f64;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.approx_kl /= k;
    stats.clip_fraction /= k;
    Ok(stats)
}
