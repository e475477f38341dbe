//! Streaming moments and return-based reward scaling.

use serde::{Deserialize, Serialize};

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStat {
    pub count: f64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    /// Combine with the stat of a disjoint sample.
    pub fn merge(&self, other: &RunningStat) -> RunningStat {
        if self.count == 0.0 {
            return *other;
        }
        if other.count == 0.0 {
            return *self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        RunningStat {
            count: n,
            mean: self.mean + d * other.count / n,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / n,
        }
    }

    /// Population variance.
    pub fn var(&self) -> f64 {
        if self.count > 0.0 {
            (self.m2 / self.count).max(0.0)
        } else {
            0.0
        }
    }

    pub fn std(&self) -> f64 {
        self.var().sqrt()
    }
}

pub const NORM_EPS: f64 = 1e-8;
pub const NORM_CLIP: f64 = 10.0;

/// Divides rewards by the running std of per-env discounted returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    pub stat: RunningStat,
    pub returns: Vec<f64>,
    pub gamma: f64,
}

impl RewardNormalizer {
    pub fn new(num_envs: usize, gamma: f64) -> Self {
        Self {
            stat: RunningStat::default(),
            returns: vec![0.0; num_envs],
            gamma,
        }
    }
}

/// Normalize a `[T, N]` reward block (row-major in time). The return stream
/// of the whole block is folded into the stat first, then every reward is
/// scaled by `1 / max(std, 1e-8)` and clipped to ±10.
pub fn normalize_rewards(raw: &[f32], dones: &[bool], norm: &mut RewardNormalizer) -> Vec<f32> {
    let n = norm.returns.len();
    assert_eq!(raw.len(), dones.len());
    assert_eq!(raw.len() % n, 0, "reward block is not a multiple of the env count");
    for (r_row, d_row) in raw.chunks(n).zip(dones.chunks(n)) {
        for e in 0..n {
            norm.returns[e] = norm.returns[e] * norm.gamma + r_row[e] as f64;
            norm.stat.push(norm.returns[e]);
            if d_row[e] {
                norm.returns[e] = 0.0;
            }
        }
    }
    let denom = norm.stat.std().max(NORM_EPS);
    raw.iter()
        .map(|&r| (r as f64 / denom).clamp(-NORM_CLIP, NORM_CLIP) as f32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngStream;

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64)
    }

    #[test]
    fn welford_matches_two_pass_and_merges() {
        let mut rng = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..1000).map(|_| 3.0 + 2.0 * rng.normal()).collect();
        let mut a = RunningStat::default();
        let mut b = RunningStat::default();
        let mut all = RunningStat::default();
        for (i, &x) in xs.iter().enumerate() {
            if i < 371 { a.push(x) } else { b.push(x) }
            all.push(x);
        }
        let (m, v) = two_pass(&xs);
        assert!((all.mean - m).abs() < 1e-12 && (all.var() - v).abs() < 1e-10);
        let merged = a.merge(&b);
        assert!((merged.mean - all.mean).abs() < 1e-9);
        assert!((merged.var() - all.var()).abs() < 1e-9);
        assert_eq!(merged.count, 1000.0);
    }

    #[test]
    fn zero_history_gives_zero() {
        let mut n = RewardNormalizer::new(2, 0.99);
        let out = normalize_rewards(&[0.0; 8], &[false; 8], &mut n);
        assert!(out.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn scale_is_inverse_return_std() {
        let gamma = 0.9;
        let mut n = RewardNormalizer::new(1, gamma);
        let mut rng = RngStream::new(1, 0);
        let raw: Vec<f32> = (0..500).map(|_| if rng.percent(30) { 1.0 } else { 0.0 }).collect();
        let dones: Vec<bool> = (0..500).map(|i| i % 50 == 49).collect();
        let out = normalize_rewards(&raw, &dones, &mut n);
        let mut g = 0.0;
        let mut rets = vec![];
        for (r, d) in raw.iter().zip(&dones) {
            g = g * gamma + *r as f64;
            rets.push(g);
            if *d {
                g = 0.0;
            }
        }
        let s = two_pass(&rets).1.sqrt();
        for (o, r) in out.iter().zip(&raw) {
            assert!((*o as f64 - *r as f64 / s).abs() < 1e-6);
        }
    }

    #[test]
    fn invariant_to_reward_scale() {
        let mut rng = RngStream::new(2, 0);
        let raw: Vec<f32> = (0..10_000).map(|_| rng.next_f64() as f32).collect();
        let dones: Vec<bool> = (0..10_000).map(|i| i % 97 == 0).collect();
        let scaled: Vec<f32> = raw.iter().map(|r| r * 10.0).collect();
        let stream = |rs: &[f32]| {
            let mut n = RewardNormalizer::new(1, 0.99);
            rs.chunks(100)
                .zip(dones.chunks(100))
                .flat_map(|(r, d)| normalize_rewards(r, d, &mut n))
                .collect::<Vec<_>>()
        };
        let (a, b) = (stream(&raw), stream(&scaled));
        for (x, y) in a.iter().zip(&b).skip(9_000) {
            assert!((x - y).abs() <= 0.01 * x.abs().max(1e-6));
        }
    }
}
