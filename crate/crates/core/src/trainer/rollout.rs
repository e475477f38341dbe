use crate::envcore::{batch_step, reset, EnvState, Observation, INVENTORY_LEN, NUM_PLANES};
use crate::numkit::{categorical_sample, forward_cached, log_softmax_row, Arch, Input, ParamSet, RngStream};
use std::borrow::Cow;

use crate::worlds::level::PLATFORMER_HEIGHT;
use crate::worlds::{Cell, Family, ShiftConfig};
use crate::{Error, Result};

/// Network shape for a family's observations and actions.
pub fn arch_for(family: Family) -> Arch {
    let (w, h) = family.grid_size();
    Arch::standard(NUM_PLANES, h, w, INVENTORY_LEN, family.num_actions())
}

/// Where the platformer agent sits in the network's view: a few columns
/// from the left edge, mid-height, so most of the view looks ahead.
pub const PLATFORMER_ANCHOR: Cell = Cell { x: 3, y: PLATFORMER_HEIGHT / 2 };

/// Planes as the network sees them. The platformer view follows the agent;
/// maze families see the whole grid.
pub fn network_planes(family: Family, o: &Observation) -> Cow<'_, [u8]> {
    if family.is_platformer() {
        Cow::Owned(o.agent_view(PLATFORMER_ANCHOR))
    } else {
        Cow::Borrowed(&o.planes)
    }
}

/// Input batch from encoded observations.
pub fn input_from_obs<'a, I>(arch: &Arch, family: Family, obs: I) -> Input<f32>
where
    I: IntoIterator<Item = &'a Observation>,
{
    let iter = obs.into_iter();
    let mut input = Input::with_capacity(arch, iter.size_hint().0);
    for o in iter {
        input.push_chw(arch, network_planes(family, o).iter().map(|&b| b as f32), &o.inventory);
    }
    input
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeStat {
    pub ret: f64,
    pub len: u32,
}

/// N environments stepped in lockstep with auto-reset.
#[derive(Clone, Debug)]
pub struct VecEnv {
    family: Family,
    envs: Vec<EnvState>,
    obs: Vec<Observation>,
    seeds: RngStream,
    ep_return: Vec<f64>,
    ep_len: Vec<u32>,
}

impl VecEnv {
    /// Level seeds, initial and on every reset, come from `seeds`.
    pub fn new(family: Family, shift: &ShiftConfig, n: usize, mut seeds: RngStream) -> Result<Self> {
        let mut envs = Vec::with_capacity(n);
        let mut obs = Vec::with_capacity(n);
        for _ in 0..n {
            let (e, o) = reset(family, seeds.next_u64(), shift)?;
            envs.push(e);
            obs.push(o);
        }
        Ok(Self {
            family,
            envs,
            obs,
            seeds,
            ep_return: vec![0.0; n],
            ep_len: vec![0; n],
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    /// Stream that supplies level seeds on reset.
    pub fn seed_stream(&self) -> &RngStream {
        &self.seeds
    }

    pub fn envs(&self) -> &[EnvState] {
        &self.envs
    }

    /// Step all envs; returns per-env (reward, done) and finished episodes.
    pub fn step(&mut self, actions: &[usize]) -> Result<(Vec<f32>, Vec<bool>, Vec<EpisodeStat>)> {
        let results = batch_step(&mut self.envs, actions, &mut self.seeds)?;
        let mut rewards = Vec::with_capacity(results.len());
        let mut dones = Vec::with_capacity(results.len());
        let mut finished = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            self.ep_return[i] += r.reward as f64;
            self.ep_len[i] += 1;
            if r.done {
                finished.push(EpisodeStat {
                    ret: self.ep_return[i],
                    len: self.ep_len[i],
                });
                self.ep_return[i] = 0.0;
                self.ep_len[i] = 0;
                self.obs[i] = self.envs[i].observe();
            } else {
                self.obs[i] = r.observation;
            }
            rewards.push(r.reward);
            dones.push(r.done);
        }
        Ok((rewards, dones, finished))
    }
}

/// `[T, N]` trajectory block, row-major in time.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBuffer {
    pub rollout_len: usize,
    pub num_envs: usize,
    pub obs_len: usize,
    /// Binary planes, `obs_len` bytes per slot.
    pub obs: Vec<u8>,
    pub inventory: Vec<f32>,
    pub actions: Vec<usize>,
    pub raw_rewards: Vec<f32>,
    /// Filled by reward normalization; equal to `raw_rewards` until then.
    pub rewards: Vec<f32>,
    /// Episode ended on this step.
    pub dones: Vec<bool>,
    pub values: Vec<f32>,
    pub log_probs: Vec<f32>,
    /// Value estimates of the state after the last step, per env.
    pub bootstrap: Vec<f32>,
    pub finished: Vec<EpisodeStat>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.rollout_len * self.num_envs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Network input for the given slots.
    pub fn input(&self, arch: &Arch, idx: &[usize]) -> Input<f32> {
        let k = arch.inventory;
        let mut input = Input::with_capacity(arch, idx.len());
        for &i in idx {
            let planes = &self.obs[i * self.obs_len..(i + 1) * self.obs_len];
            input.push_chw(arch, planes.iter().map(|&b| b as f32), &self.inventory[i * k..(i + 1) * k]);
        }
        input
    }
}

/// Sample actions and per-env log-probs from one forward pass.
pub fn act(
    params: &ParamSet<f32>,
    family: Family,
    obs: &[Observation],
    rng: &mut RngStream,
) -> Result<(Vec<usize>, Vec<f32>, Vec<f32>)> {
    let arch = *params.arch();
    let (logits, values, _) = forward_cached(params, &input_from_obs(&arch, family, obs))?;
    let a = arch.actions;
    let mut lp = vec![0f32; a];
    let mut actions = Vec::with_capacity(obs.len());
    let mut log_probs = Vec::with_capacity(obs.len());
    for row in logits.chunks(a) {
        let act = categorical_sample(row, rng);
        log_softmax_row(row, &mut lp);
        actions.push(act);
        log_probs.push(lp[act]);
    }
    Ok((actions, log_probs, values))
}

/// Run the current policy for `t_len` steps in every env.
pub fn collect_rollout(
    params: &ParamSet<f32>,
    venv: &mut VecEnv,
    rng: &mut RngStream,
    t_len: usize,
) -> Result<RolloutBuffer> {
    let arch = *params.arch();
    let family = venv.family();
    let n = venv.len();
    if n == 0 || t_len == 0 {
        return Err(Error::Config("rollout needs at least one env and one step".into()));
    }
    let obs_len = arch.obs_len();
    if venv.observations()[0].planes.len() != obs_len {
        return Err(Error::Shape(format!(
            "observations have {} values, network expects {obs_len}",
            venv.observations()[0].planes.len()
        )));
    }
    let total = t_len * n;
    let mut buf = RolloutBuffer {
        rollout_len: t_len,
        num_envs: n,
        obs_len,
        obs: Vec::with_capacity(total * obs_len),
        inventory: Vec::with_capacity(total * arch.inventory),
        actions: Vec::with_capacity(total),
        raw_rewards: Vec::with_capacity(total),
        rewards: Vec::new(),
        dones: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        log_probs: Vec::with_capacity(total),
        bootstrap: Vec::new(),
        finished: Vec::new(),
    };
    for _ in 0..t_len {
        for o in venv.observations() {
            buf.obs.extend_from_slice(&network_planes(family, o));
            buf.inventory.extend_from_slice(&o.inventory);
        }
        let (actions, log_probs, values) = act(params, family, venv.observations(), rng)?;
        let (rewards, dones, finished) = venv.step(&actions)?;
        buf.actions.extend(actions);
        buf.log_probs.extend(log_probs);
        buf.values.extend(values);
        buf.raw_rewards.extend(rewards);
        buf.dones.extend(dones);
        buf.finished.extend(finished);
    }
    let (_, values, _) = forward_cached(params, &input_from_obs(&arch, family, venv.observations()))?;
    buf.bootstrap = values;
    buf.rewards = buf.raw_rewards.clone();
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::argmax;

    fn setup(family: Family, n: usize) -> (ParamSet<f32>, VecEnv) {
        let arch = arch_for(family);
        let params = ParamSet::init(arch, &mut RngStream::new(1, 0));
        let venv = VecEnv::new(family, &ShiftConfig::train(family), n, RngStream::new(1, 1)).unwrap();
        (params, venv)
    }

    #[test]
    fn single_transition() {
        let (p, mut v) = setup(Family::Maze1, 1);
        let b = collect_rollout(&p, &mut v, &mut RngStream::new(1, 0), 1).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.actions.len(), 1);
        assert_eq!(b.bootstrap.len(), 1);
        assert_eq!(b.obs.len(), b.obs_len);
    }

    #[test]
    fn near_one_hot_policy_takes_argmax() {
        let (mut p, mut v) = setup(Family::CoinRun, 4);
        p.get_mut("policy.bias").unwrap().data_mut()[1] = 60.0;
        let b = collect_rollout(&p, &mut v, &mut RngStream::new(3, 0), 16).unwrap();
        let arch = *p.arch();
        let idx: Vec<usize> = (0..b.len()).collect();
        let (logits, _, _) = forward_cached(&p, &b.input(&arch, &idx)).unwrap();
        for (row, &a) in logits.chunks(arch.actions).zip(&b.actions) {
            assert_eq!(a, argmax(row));
        }
    }

    #[test]
    fn seeded_rollouts_are_identical() {
        let run = || {
            let (p, mut v) = setup(Family::KeysChests, 3);
            collect_rollout(&p, &mut v, &mut RngStream::new(9, 0), 40).unwrap()
        };
        assert_eq!(run(), run());
    }
}
