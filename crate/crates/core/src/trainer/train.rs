use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::numkit::{AdamConfig, AdamState, ParamSet, RngStream};
use crate::worlds::{Family, ShiftConfig};
use crate::Result;

use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use super::gae::compute_gae;
use super::rollout::{arch_for, collect_rollout, VecEnv};
use super::stats::{normalize_rewards, RewardNormalizer};
use super::update::ppo_update;

/// Seed stream ids derived from the top-level seed.
pub mod streams {
    pub const TRAIN: u64 = 0;
    pub const ENV_RESETS: u64 = 1;
    pub const EVAL: u64 = 2;
    pub const SHUFFLE: u64 = 3;
}

/// One line of the metrics file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Environment steps taken so far.
    pub step: u64,
    pub update: u64,
    /// Mean raw return of episodes finished during this rollout (null if none).
    pub mean_return: Option<f64>,
    pub mean_length: Option<f64>,
    pub episodes: usize,
    pub loss_policy: f64,
    pub loss_value: f64,
    pub entropy: f64,
    pub kl_estimate: f64,
    pub clip_fraction: f64,
}

/// Where training writes its artifacts.
#[derive(Clone, Debug, Default)]
pub struct TrainSinks {
    pub checkpoint: Option<PathBuf>,
    /// JSON-lines metrics file. Lines stream into a hidden `.partial`
    /// sibling that is renamed into place when training completes.
    pub metrics: Option<PathBuf>,
    /// Also checkpoint every this many updates (0: only at the end).
    pub checkpoint_every: u64,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub metrics: Vec<MetricsRecord>,
}

impl TrainOutcome {
    pub fn params(&self) -> &ParamSet<f32> {
        &self.checkpoint.params
    }
}

/// Collect, normalize, estimate advantages, update; repeat until the
/// timestep budget is spent.
pub fn train(
    config: &TrainConfig,
    family: Family,
    shift: &ShiftConfig,
    sinks: &TrainSinks,
    on_update: &mut dyn FnMut(&MetricsRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    shift.check_family(family)?;
    let mut action_rng = RngStream::new(config.seed, streams::TRAIN);
    let mut params = ParamSet::init(arch_for(family), &mut action_rng);
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr), &params);
    let mut shuffle_rng = RngStream::new(config.seed, streams::SHUFFLE);
    let mut venv = VecEnv::new(
        family,
        shift,
        config.num_envs,
        RngStream::new(config.seed, streams::ENV_RESETS),
    )?;
    let mut reward_norm = RewardNormalizer::new(config.num_envs, config.gamma);
    let partial = sinks.metrics.as_deref().map(partial_path);
    let mut metrics_out = match &partial {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let mut records = Vec::new();
    let mut timesteps = 0u64;
    let updates = config.num_updates();
    let snapshot = |params: &ParamSet<f32>,
                    adam: &AdamState<f32>,
                    action_rng: &RngStream,
                    venv: &VecEnv,
                    shuffle_rng: &RngStream,
                    reward_norm: &RewardNormalizer,
                    timesteps: u64,
                    update: u64| {
        Checkpoint {
            family,
            shift: *shift,
            params: params.clone(),
            adam: adam.clone(),
            action_rng: *action_rng,
            reset_rng: *venv.seed_stream(),
            shuffle_rng: *shuffle_rng,
            reward_norm: reward_norm.clone(),
            timesteps,
            updates: update,
        }
    };
    for update in 1..=updates {
        let mut buf = collect_rollout(&params, &mut venv, &mut action_rng, config.rollout_len)?;
        timesteps += buf.len() as u64;
        if config.reward_normalization {
            buf.rewards = normalize_rewards(&buf.raw_rewards, &buf.dones, &mut reward_norm);
        }
        let (adv, targets) = compute_gae(&buf.rewards, &buf.values, &buf.dones, &buf.bootstrap, config.gamma, config.lambda);
        let stats = ppo_update(&mut params, &mut adam, &buf, &adv, &targets, config, &mut shuffle_rng)?;
        let episodes = buf.finished.len();
        let mean = |f: fn(&super::rollout::EpisodeStat) -> f64| {
            (episodes > 0).then(|| buf.finished.iter().map(f).sum::<f64>() / episodes as f64)
        };
        let rec = MetricsRecord {
            step: timesteps,
            update,
            mean_return: mean(|e| e.ret),
            mean_length: mean(|e| e.len as f64),
            episodes,
            loss_policy: stats.policy_loss,
            loss_value: stats.value_loss,
            entropy: stats.entropy,
            kl_estimate: stats.approx_kl,
            clip_fraction: stats.clip_fraction,
        };
        if let Some(out) = metrics_out.as_mut() {
            serde_json::to_writer(&mut *out, &rec).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        on_update(&rec);
        records.push(rec);
        if let Some(path) = &sinks.checkpoint {
            if sinks.checkpoint_every > 0 && update % sinks.checkpoint_every == 0 && update != updates {
                snapshot(&params, &adam, &action_rng, &venv, &shuffle_rng, &reward_norm, timesteps, update).save(path)?;
            }
        }
    }
    let ckpt = snapshot(&params, &adam, &action_rng, &venv, &shuffle_rng, &reward_norm, timesteps, updates);
    if let Some(path) = &sinks.checkpoint {
        ckpt.save(path)?;
    }
    if let (Some(tmp), Some(path)) = (partial, &sinks.metrics) {
        drop(metrics_out);
        std::fs::rename(tmp, path)?;
    }
    Ok(TrainOutcome {
        checkpoint: ckpt,
        metrics: records,
    })
}

fn partial_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.partial"))
}

pub const CHECKPOINT_FILE: &str = "checkpoint.mgc";
pub const METRICS_FILE: &str = "metrics.jsonl";
/// Written after the final checkpoint; marks a finished run.
pub const RUN_FILE: &str = "run.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RunManifest {
    family: Family,
    shift: ShiftConfig,
    config: TrainConfig,
    checkpoint_id: String,
}

fn finished_run(dir: &Path, manifest: &RunManifest) -> Option<Checkpoint> {
    let text = std::fs::read_to_string(dir.join(RUN_FILE)).ok()?;
    let found: RunManifest = serde_json::from_str(&text).ok()?;
    let ckpt = Checkpoint::load(&dir.join(CHECKPOINT_FILE)).ok()?;
    let same = found.family == manifest.family && found.shift == manifest.shift && found.config == manifest.config;
    (same && found.checkpoint_id == ckpt.id()).then_some(ckpt)
}

/// Train with checkpoint and metrics files in `dir`. With `reuse`, a run
/// already finished there under the same family, shift and config is
/// loaded instead of retrained.
pub fn train_in_dir(
    config: &TrainConfig,
    family: Family,
    shift: &ShiftConfig,
    dir: &Path,
    reuse: bool,
    on_update: &mut dyn FnMut(&MetricsRecord),
) -> Result<(Checkpoint, bool)> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = RunManifest {
        family,
        shift: *shift,
        config: *config,
        checkpoint_id: String::new(),
    };
    if reuse {
        if let Some(c) = finished_run(dir, &manifest) {
            return Ok((c, true));
        }
    }
    let _ = std::fs::remove_file(dir.join(RUN_FILE));
    let sinks = TrainSinks {
        checkpoint: Some(dir.join(CHECKPOINT_FILE)),
        metrics: Some(dir.join(METRICS_FILE)),
        checkpoint_every: 0,
    };
    let out = train(config, family, shift, &sinks, on_update)?;
    manifest.checkpoint_id = out.checkpoint.id();
    let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::from)?;
    crate::write_atomic(&dir.join(RUN_FILE), format!("{json}\n").as_bytes())?;
    Ok((out.checkpoint, false))
}
