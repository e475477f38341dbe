//! Composite PPO loss and its exact gradient.
//!
//! For a minibatch of `M` samples with ratio `ρ = exp(logπ(a|s) − logπ_old(a|s))`:
//!
//! ```text
//! L = scale · ( −mean(min(ρ·Â, clip(ρ, 1−ε, 1+ε)·Â))
//!               + c_v · mean((V − target)²)
//!               − k_H · mean(H[π(·|s)]) )
//! ```

use super::dist::{entropy_from_log_probs, log_softmax_row};
use super::net::{backward_from_heads, forward_cached, Input, ParamSet};
use super::tensor::Scalar;
use crate::{Error, Result};

/// Rows per forward/backward chunk; bounds activation memory.
pub const CHUNK_ROWS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCoefs {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub scale: f64,
}

pub struct LossBatch<'a, T> {
    pub input: &'a Input<T>,
    pub actions: &'a [usize],
    pub old_log_probs: &'a [T],
    pub advantages: &'a [T],
    pub targets: &'a [T],
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// mean(old_logp − new_logp)
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// max |ρ − 1| over the batch
    pub max_ratio_dev: f64,
}

impl<T: Scalar> LossBatch<'_, T> {
    fn check(&self) -> Result<usize> {
        let m = self.input.batch;
        if self.actions.len() != m || self.old_log_probs.len() != m || self.advantages.len() != m || self.targets.len() != m {
            return Err(Error::Shape(format!(
                "loss batch of {m} rows has {}/{}/{}/{} actions/logps/advantages/targets",
                self.actions.len(),
                self.old_log_probs.len(),
                self.advantages.len(),
                self.targets.len()
            )));
        }
        if m == 0 {
            return Err(Error::Shape("empty loss batch".into()));
        }
        Ok(m)
    }
}

fn slice_input<T: Scalar>(input: &Input<T>, start: usize, end: usize) -> Input<T> {
    let obs_len = input.nhwc.len() / input.batch.max(1);
    let inv_len = input.inventory.len() / input.batch.max(1);
    Input {
        batch: end - start,
        nhwc: input.nhwc[start * obs_len..end * obs_len].to_vec(),
        inventory: input.inventory[start * inv_len..end * inv_len].to_vec(),
    }
}

/// Loss value and head gradients for one chunk; accumulates stats (unnormalized sums).
#[allow(clippy::too_many_arguments)]
fn head_terms<T: Scalar>(
    logits: &[T],
    values: &[T],
    batch: &LossBatch<'_, T>,
    offset: usize,
    coefs: &LossCoefs,
    m_total: usize,
    sums: &mut LossStats,
    dlogits: &mut [T],
    dvalues: &mut [T],
) {
    let a = logits.len() / values.len();
    let inv_m = 1.0 / m_total as f64;
    let mut logp = vec![T::ZERO; a];
    for i in 0..values.len() {
        let g = offset + i;
        let row = &logits[i * a..(i + 1) * a];
        log_softmax_row(row, &mut logp);
        let act = batch.actions[g];
        let lp = logp[act].to_f64();
        let old = batch.old_log_probs[g].to_f64();
        let adv = batch.advantages[g].to_f64();
        let ratio = (lp - old).exp();
        let lo = 1.0 - coefs.clip;
        let hi = 1.0 + coefs.clip;
        let clipped = ratio.clamp(lo, hi);
        let unclipped_term = ratio * adv;
        let clipped_term = clipped * adv;
        let (surr, active) = if unclipped_term <= clipped_term {
            (unclipped_term, true)
        } else {
            (clipped_term, false)
        };
        if ratio < lo || ratio > hi {
            sums.clip_fraction += 1.0;
        }
        sums.max_ratio_dev = sums.max_ratio_dev.max((ratio - 1.0).abs());
        sums.policy_loss -= surr;
        sums.approx_kl += old - lp;

        let h = entropy_from_log_probs(&logp).to_f64();
        sums.entropy += h;

        let v = values[i].to_f64();
        let err = v - batch.targets[g].to_f64();
        sums.value_loss += err * err;

        // d(surr)/d(logp) = ρ·Â on the active unclipped branch, else 0
        let dsurr = if active { ratio * adv } else { 0.0 };
        let drow = &mut dlogits[i * a..(i + 1) * a];
        for j in 0..a {
            let lpj = logp[j].to_f64();
            let pj = lpj.exp();
            let onehot = if j == act { 1.0 } else { 0.0 };
            let d_policy = -dsurr * (onehot - pj);
            let d_entropy = coefs.entropy_coef * pj * (lpj + h);
            drow[j] = T::from_f64(coefs.scale * inv_m * (d_policy + d_entropy));
        }
        dvalues[i] = T::from_f64(coefs.scale * inv_m * coefs.value_coef * 2.0 * err);
    }
}

fn finish(mut s: LossStats, m: usize, coefs: &LossCoefs) -> Result<LossStats> {
    let inv = 1.0 / m as f64;
    s.policy_loss *= inv;
    s.value_loss *= inv;
    s.entropy *= inv;
    s.approx_kl *= inv;
    s.clip_fraction *= inv;
    s.loss = coefs.scale * (s.policy_loss + coefs.value_coef * s.value_loss - coefs.entropy_coef * s.entropy);
    if !s.loss.is_finite() {
        return Err(Error::NonFinite(format!("loss ({s:?})")));
    }
    Ok(s)
}

/// Loss value only.
pub fn ppo_loss<T: Scalar>(params: &ParamSet<T>, batch: &LossBatch<'_, T>, coefs: &LossCoefs) -> Result<LossStats> {
    let m = batch.check()?;
    let mut sums = LossStats::default();
    let a = params.arch().actions;
    let mut start = 0;
    while start < m {
        let end = (start + CHUNK_ROWS).min(m);
        let sub = slice_input(batch.input, start, end);
        let (logits, values, _) = forward_cached(params, &sub)?;
        let mut dl = vec![T::ZERO; (end - start) * a];
        let mut dv = vec![T::ZERO; end - start];
        head_terms(&logits, &values, batch, start, coefs, m, &mut sums, &mut dl, &mut dv);
        start = end;
    }
    finish(sums, m, coefs)
}

/// Loss value and its gradient with respect to every parameter.
pub fn backward<T: Scalar>(params: &ParamSet<T>, batch: &LossBatch<'_, T>, coefs: &LossCoefs) -> Result<(ParamSet<T>, LossStats)> {
    let m = batch.check()?;
    let mut grads = params.zeros_like();
    let mut sums = LossStats::default();
    let a = params.arch().actions;
    let mut start = 0;
    while start < m {
        let end = (start + CHUNK_ROWS).min(m);
        let sub = slice_input(batch.input, start, end);
        let (logits, values, cache) = forward_cached(params, &sub)?;
        let mut dl = vec![T::ZERO; (end - start) * a];
        let mut dv = vec![T::ZERO; end - start];
        head_terms(&logits, &values, batch, start, coefs, m, &mut sums, &mut dl, &mut dv);
        backward_from_heads(params, &cache, &dl, &dv, &mut grads)?;
        start = end;
    }
    let stats = finish(sums, m, coefs)?;
    Ok((grads, stats))
}
