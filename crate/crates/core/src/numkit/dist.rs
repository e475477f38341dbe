//! Categorical distribution helpers over logit rows.

use super::rng::RngStream;
use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

/// Numerically stable log-softmax of one row.
pub fn log_softmax_row<T: Scalar>(logits: &[T], out: &mut [T]) {
    let max = logits.iter().copied().fold(logits[0], |m, v| m.max(v));
    let mut sum = T::ZERO;
    for &v in logits {
        sum += (v - max).exp();
    }
    let log_sum = sum.ln();
    for (o, &v) in out.iter_mut().zip(logits) {
        *o = (v - max) - log_sum;
    }
}

/// Sample an index from `softmax(logits)` using one uniform draw.
pub fn categorical_sample<T: Scalar>(logits: &[T], rng: &mut RngStream) -> usize {
    let max = logits.iter().copied().fold(logits[0], |m, v| m.max(v)).to_f64();
    let weights: Vec<f64> = logits.iter().map(|v| (v.to_f64() - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let u = rng.next_f64() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack at the top; take the last nonzero weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Index of the largest logit (first on ties).
pub fn argmax<T: Scalar>(logits: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Per-row log-probability of `actions` and entropy, for `[B,A]` logits.
pub fn log_prob_entropy<T: Scalar>(logits: &Tensor<T>, actions: &[usize]) -> Result<(Tensor<T>, Tensor<T>)> {
    let s = logits.shape();
    if s.len() != 2 || s[0] != actions.len() {
        return Err(Error::Shape(format!(
            "logits {:?} with {} actions",
            s,
            actions.len()
        )));
    }
    let a = s[1];
    let mut lp = Vec::with_capacity(s[0]);
    let mut ent = Vec::with_capacity(s[0]);
    let mut row = vec![T::ZERO; a];
    for (i, &act) in actions.iter().enumerate() {
        if act >= a {
            return Err(Error::Shape(format!("action {act} out of range for {a} logits")));
        }
        log_softmax_row(&logits.data()[i * a..(i + 1) * a], &mut row);
        lp.push(row[act]);
        ent.push(entropy_from_log_probs(&row));
    }
    Ok((
        Tensor::from_vec(&[s[0]], lp)?,
        Tensor::from_vec(&[s[0]], ent)?,
    ))
}

pub fn entropy_from_log_probs<T: Scalar>(logp: &[T]) -> T {
    let mut h = T::ZERO;
    for &l in logp {
        h += -(l.exp() * l);
    }
    if h < T::ZERO {
        T::ZERO
    } else {
        h
    }
}
