//! Independent reference implementations used as test oracles.
//!
//! Everything here is written with direct nested loops in f64 and shares no
//! code with the library's im2col/GEMM path.

#![allow(dead_code)]

use misgen::numkit::{Arch, ParamSet};

pub struct RefOut {
    pub logits: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// ReLU on/off pattern of every hidden unit, for kink detection.
    pub pattern: Vec<bool>,
}

fn w(p: &ParamSet<f64>, name: &str) -> Vec<f64> {
    p.get(name).unwrap().data().to_vec()
}

/// `obs[b]` is CHW, `inv[b]` has K entries.
pub fn reference_forward(p: &ParamSet<f64>, obs: &[Vec<f64>], inv: &[Vec<f64>]) -> RefOut {
    let a: Arch = *p.arch();
    let (c0, h, wd) = (a.channels, a.height, a.width);
    let (w1, b1) = (w(p, "conv1.weight"), w(p, "conv1.bias"));
    let (w2, b2) = (w(p, "conv2.weight"), w(p, "conv2.bias"));
    let (wf, bf) = (w(p, "fc.weight"), w(p, "fc.bias"));
    let (wp, bp) = (w(p, "policy.weight"), w(p, "policy.bias"));
    let (wv, bv) = (w(p, "value.weight"), w(p, "value.bias"));
    let mut out = RefOut {
        logits: vec![],
        values: vec![],
        pattern: vec![],
    };
    for (x, k) in obs.iter().zip(inv) {
        // x as [c][y][x]
        let conv = |input: &dyn Fn(usize, isize, isize) -> f64, cin: usize, cout: usize, wt: &[f64], bias: &[f64]| {
            let mut o = vec![0.0; cout * h * wd];
            for co in 0..cout {
                for y in 0..h {
                    for xx in 0..wd {
                        let mut s = bias[co];
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let sy = y as isize + ky as isize - 1;
                                let sx = xx as isize + kx as isize - 1;
                                for ci in 0..cin {
                                    s += wt[((co * 3 + ky) * 3 + kx) * cin + ci] * input(ci, sy, sx);
                                }
                            }
                        }
                        o[(co * h + y) * wd + xx] = s;
                    }
                }
            }
            o
        };
        let inb = |sy: isize, sx: isize| sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < wd;
        let z1 = conv(
            &|ci, sy, sx| if inb(sy, sx) { x[(ci * h + sy as usize) * wd + sx as usize] } else { 0.0 },
            c0,
            a.conv1,
            &w1,
            &b1,
        );
        out.pattern.extend(z1.iter().map(|&v| v > 0.0));
        let a1: Vec<f64> = z1.iter().map(|&v| v.max(0.0)).collect();
        let z2 = conv(
            &|ci, sy, sx| if inb(sy, sx) { a1[(ci * h + sy as usize) * wd + sx as usize] } else { 0.0 },
            a.conv1,
            a.conv2,
            &w2,
            &b2,
        );
        out.pattern.extend(z2.iter().map(|&v| v > 0.0));
        let a2: Vec<f64> = z2.iter().map(|&v| v.max(0.0)).collect();
        // flatten in (y, x, c) order, then inventory
        let mut flat = Vec::with_capacity(a.fc_in());
        for y in 0..h {
            for xx in 0..wd {
                for c in 0..a.conv2 {
                    flat.push(a2[(c * h + y) * wd + xx]);
                }
            }
        }
        flat.extend_from_slice(k);
        let mut hid = vec![0.0; a.hidden];
        for j in 0..a.hidden {
            let mut s = bf[j];
            for (i, f) in flat.iter().enumerate() {
                s += wf[j * a.fc_in() + i] * f;
            }
            out.pattern.push(s > 0.0);
            hid[j] = s.max(0.0);
        }
        let logits: Vec<f64> = (0..a.actions)
            .map(|j| bp[j] + (0..a.hidden).map(|i| wp[j * a.hidden + i] * hid[i]).sum::<f64>())
            .collect();
        let value = bv[0] + (0..a.hidden).map(|i| wv[i] * hid[i]).sum::<f64>();
        out.logits.push(logits);
        out.values.push(value);
    }
    out
}

pub struct RefLoss {
    pub loss: f64,
    /// per-sample: which branch of min/clip is active
    pub pattern: Vec<u8>,
}

#[allow(clippy::too_many_arguments)]
pub fn reference_loss(
    out: &RefOut,
    actions: &[usize],
    old: &[f64],
    adv: &[f64],
    tgt: &[f64],
    clip: f64,
    cv: f64,
    kh: f64,
) -> RefLoss {
    let m = actions.len() as f64;
    let (mut pol, mut val, mut ent) = (0.0, 0.0, 0.0);
    let mut pattern = vec![];
    for i in 0..actions.len() {
        let row = &out.logits[i];
        let z: f64 = row.iter().map(|v| v.exp()).sum();
        let p: Vec<f64> = row.iter().map(|v| v.exp() / z).collect();
        let lp = p[actions[i]].ln();
        let r = (lp - old[i]).exp();
        let rc = r.clamp(1.0 - clip, 1.0 + clip);
        let (u, c) = (r * adv[i], rc * adv[i]);
        pattern.push(if u <= c { 0 } else { 1 } + if r < 1.0 - clip { 2 } else if r > 1.0 + clip { 4 } else { 0 });
        pol -= u.min(c);
        val += (out.values[i] - tgt[i]).powi(2);
        ent -= p.iter().map(|q| q * q.ln()).sum::<f64>();
    }
    RefLoss {
        loss: pol / m + cv * val / m - kh * ent / m,
        pattern,
    }
}

/// Direct double-sum definition of GAE: Â_t = Σ_l (γλ)^l δ_{t+l}, truncated at
/// the first terminal step.
pub fn gae_double_sum(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let t_len = rewards.len();
    let v_next = |t: usize| if t + 1 < t_len { values[t + 1] } else { bootstrap };
    let delta: Vec<f64> = (0..t_len)
        .map(|t| rewards[t] + if dones[t] { 0.0 } else { gamma * v_next(t) } - values[t])
        .collect();
    (0..t_len)
        .map(|t| {
            let mut s = 0.0;
            for l in 0..(t_len - t) {
                s += (gamma * lambda).powi(l as i32) * delta[t + l];
                if dones[t + l] {
                    break;
                }
            }
            s
        })
        .collect()
}
