//! Central finite-difference check of the composite PPO loss gradient.

use misgen::numkit::{backward, Arch, Input, LossBatch, LossCoefs, ParamSet, RngStream};

use super::oracle::{reference_forward, reference_loss};

pub const FD_STEP: f64 = 1e-3;
/// Gradients smaller than this are compared absolutely (relative error is
/// meaningless at the FD truncation floor).
pub const REL_FLOOR: f64 = 1e-3;

pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub worst: String,
}

pub fn small_arch() -> Arch {
    Arch {
        channels: 4,
        height: 3,
        width: 4,
        inventory: 1,
        conv1: 3,
        conv2: 4,
        hidden: 10,
        actions: 5,
    }
}

/// Draw a random batch, compare every parameter's analytic gradient with
/// central differences of the reference loss.
pub fn check_random_batch(seed: u64, arch: Arch, m: usize) -> GradCheck {
    let mut rng = RngStream::new(seed, 77);
    let mut p = ParamSet::<f64>::init(arch, &mut rng);
    for t in p.tensors_mut() {
        t.data_mut().iter_mut().for_each(|v| *v += 0.3 * rng.normal());
    }
    let obs: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..arch.obs_len()).map(|_| if rng.next_f64() < 0.4 { 1.0 } else { rng.next_f64() }).collect())
        .collect();
    let inv: Vec<Vec<f64>> = (0..m).map(|_| (0..arch.inventory).map(|_| rng.next_f64()).collect()).collect();
    let actions: Vec<usize> = (0..m).map(|_| rng.index(arch.actions)).collect();
    let adv: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
    let tgt: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
    // old log-probs: current log-prob shifted so ratios sit well inside or
    // well outside the clip band
    let base = reference_forward(&p, &obs, &inv);
    let shifts = [0.0, 0.05, -0.05, 0.6, -0.6];
    let old: Vec<f64> = (0..m)
        .map(|i| {
            let row = &base.logits[i];
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            (row[actions[i]].exp() / z).ln() + shifts[rng.index(shifts.len())]
        })
        .collect();
    let (clip, cv, kh) = (0.2, 0.5, 0.01);

    let mut input = Input::with_capacity(&arch, m);
    for (o, k) in obs.iter().zip(&inv) {
        input.push_chw(&arch, o.iter().copied(), k);
    }
    let batch = LossBatch {
        input: &input,
        actions: &actions,
        old_log_probs: &old,
        advantages: &adv,
        targets: &tgt,
    };
    let coefs = LossCoefs {
        clip,
        value_coef: cv,
        entropy_coef: kh,
        scale: 1.0,
    };
    let (grads, _) = backward(&p, &batch, &coefs).unwrap();

    let eval = |p: &ParamSet<f64>| {
        let out = reference_forward(p, &obs, &inv);
        let l = reference_loss(&out, &actions, &old, &adv, &tgt, clip, cv, kh);
        (l.loss, out.pattern, l.pattern)
    };
    let mut res = GradCheck {
        max_rel_err: 0.0,
        checked: 0,
        skipped_kinks: 0,
        worst: String::new(),
    };
    for ti in 0..p.len() {
        let name = p.names()[ti].clone();
        for j in 0..p.tensors()[ti].len() {
            let mut plus = p.clone();
            plus.tensors_mut()[ti].data_mut()[j] += FD_STEP;
            let mut minus = p.clone();
            minus.tensors_mut()[ti].data_mut()[j] -= FD_STEP;
            let (lp, ap, bp) = eval(&plus);
            let (lm, am, bm) = eval(&minus);
            if ap != am || bp != bm {
                res.skipped_kinks += 1;
                continue;
            }
            let fd = (lp - lm) / (2.0 * FD_STEP);
            let an = grads.tensors()[ti].data()[j];
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(REL_FLOOR);
            res.checked += 1;
            if rel > res.max_rel_err {
                res.max_rel_err = rel;
                res.worst = format!("{name}[{j}]: analytic {an:e} fd {fd:e}");
            }
        }
    }
    res
}
