//! Running a fixed policy on test levels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envcore::{reset, EnvState, EpisodeTranscript};
use crate::numkit::{argmax, categorical_sample, forward_cached, ParamSet, RngStream};
use crate::trainer::{arch_for, input_from_obs, streams};
use crate::worlds::{Family, ShiftConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    Stochastic,
    Greedy,
}

impl std::str::FromStr for PolicyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(PolicyMode::Stochastic),
            "greedy" => Ok(PolicyMode::Greedy),
            _ => Err(Error::Config(format!("unknown policy mode `{s}` (stochastic|greedy)"))),
        }
    }
}

/// Episodes evaluated in lockstep per forward batch.
pub const EVAL_CHUNK: usize = 64;

fn check_arch(params: &ParamSet<f32>, family: Family) -> Result<()> {
    if *params.arch() != arch_for(family) {
        return Err(Error::Shape(format!(
            "policy architecture {:?} does not fit {family} (expects {:?})",
            params.arch(),
            arch_for(family)
        )));
    }
    Ok(())
}

fn choose(row: &[f32], mode: PolicyMode, rng: &mut RngStream) -> usize {
    match mode {
        PolicyMode::Stochastic => categorical_sample(row, rng),
        PolicyMode::Greedy => argmax(row),
    }
}

/// Run several episodes side by side, one forward pass per tick over the
/// episodes still live. Each episode has its own action stream.
fn run_lockstep(
    params: &ParamSet<f32>,
    mut envs: Vec<EnvState>,
    rngs: &mut [RngStream],
    mode: PolicyMode,
) -> Result<Vec<EpisodeTranscript>> {
    let arch = *params.arch();
    let Some(family) = envs.first().map(EnvState::family) else {
        return Ok(Vec::new());
    };
    let mut transcripts: Vec<_> = envs.iter().map(EpisodeTranscript::start).collect();
    let mut obs: Vec<_> = envs.iter().map(|e| e.observe()).collect();
    loop {
        let live: Vec<usize> = (0..envs.len()).filter(|&i| !envs[i].is_done()).collect();
        if live.is_empty() {
            break;
        }
        let (logits, _, _) = forward_cached(params, &input_from_obs(&arch, family, live.iter().map(|&i| &obs[i])))?;
        for (row, &i) in logits.chunks(arch.actions).zip(&live) {
            let a = choose(row, mode, &mut rngs[i]);
            let r = envs[i].step(a)?;
            transcripts[i].push(a, &r);
            obs[i] = r.observation;
        }
    }
    Ok(transcripts)
}

/// Deploy `params` for one episode on the level `(family, seed, shift)`.
pub fn rollout_policy(
    params: &ParamSet<f32>,
    family: Family,
    shift: &ShiftConfig,
    seed: u64,
    mode: PolicyMode,
    rng: &mut RngStream,
) -> Result<EpisodeTranscript> {
    check_arch(params, family)?;
    let (env, _) = reset(family, seed, shift)?;
    let mut out = run_lockstep(params, vec![env], std::slice::from_mut(rng), mode)?;
    Ok(out.pop().unwrap())
}

/// Level seed and action stream of evaluation episode `i`.
pub fn episode_seed(base_seed: u64, i: usize) -> (u64, RngStream) {
    let level_seed = RngStream::new(base_seed, streams::EVAL).at(i as u64);
    (level_seed, RngStream::new(level_seed, streams::EVAL))
}

/// Worker pool sized by `MISGEN_THREADS` (default: all cores).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var("MISGEN_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("MISGEN_THREADS=`{v}` is not a positive integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Eval(format!("thread pool: {e}")))
}

/// `episodes` independent test episodes, each passed to `f(index, level
/// seed, transcript)` as soon as its chunk finishes so transcripts need not
/// all be held at once. The result is the same for any thread count.
pub fn run_episodes<R, F>(
    params: &ParamSet<f32>,
    family: Family,
    shift: &ShiftConfig,
    episodes: usize,
    base_seed: u64,
    mode: PolicyMode,
    f: F,
) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, u64, EpisodeTranscript) -> Result<R> + Sync,
{
    check_arch(params, family)?;
    shift.check_family(family)?;
    let chunks: Vec<Vec<usize>> = (0..episodes)
        .collect::<Vec<_>>()
        .chunks(EVAL_CHUNK)
        .map(|c| c.to_vec())
        .collect();
    let pool = thread_pool()?;
    let results: Vec<Result<Vec<R>>> = pool.install(|| {
        chunks
            .par_iter()
            .map(|chunk| {
                let mut envs = Vec::with_capacity(chunk.len());
                let mut rngs = Vec::with_capacity(chunk.len());
                let mut seeds = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    let (seed, rng) = episode_seed(base_seed, i);
                    envs.push(reset(family, seed, shift)?.0);
                    rngs.push(rng);
                    seeds.push(seed);
                }
                let ts = run_lockstep(params, envs, &mut rngs, mode)?;
                chunk.iter().zip(seeds).zip(ts).map(|((&i, seed), t)| f(i, seed, t)).collect()
            })
            .collect()
    });
    let mut out = Vec::with_capacity(episodes);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
