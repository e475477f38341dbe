use crate::numkit::Scalar;

/// GAE(λ) over a `[T, N]` block (row-major in time).
///
/// `δ_t = r_t + γ(1−d_t)V_{t+1} − V_t`, `A_t = δ_t + γλ(1−d_t)A_{t+1}`,
/// with `V_T = bootstrap`. Targets are `A_t + V_t`.
pub fn compute_gae<T: Scalar>(
    rewards: &[T],
    values: &[T],
    dones: &[bool],
    bootstrap: &[T],
    gamma: f64,
    lambda: f64,
) -> (Vec<T>, Vec<T>) {
    let n = bootstrap.len();
    assert!(n > 0 && rewards.len() % n == 0);
    assert!(values.len() == rewards.len() && dones.len() == rewards.len());
    let t_len = rewards.len() / n;
    let g = T::from_f64(gamma);
    let gl = T::from_f64(gamma * lambda);
    let mut adv = vec![T::ZERO; rewards.len()];
    let mut next_adv = vec![T::ZERO; n];
    let mut next_value = bootstrap.to_vec();
    for t in (0..t_len).rev() {
        for e in 0..n {
            let i = t * n + e;
            let live = if dones[i] { T::ZERO } else { T::ONE };
            let delta = rewards[i] + g * live * next_value[e] - values[i];
            let a = delta + gl * live * next_adv[e];
            adv[i] = a;
            next_adv[e] = a;
            next_value[e] = values[i];
        }
    }
    let targets = adv.iter().zip(values).map(|(&a, &v)| a + v).collect();
    (adv, targets)
}
