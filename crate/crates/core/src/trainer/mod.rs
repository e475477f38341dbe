//! PPO training: vectorized rollouts, return-based reward normalization,
//! GAE, clipped-surrogate updates, checkpoints and metrics.

pub mod checkpoint;
pub mod config;
pub mod gae;
pub mod rollout;
pub mod stats;
pub mod train;
pub mod update;

pub use checkpoint::Checkpoint;
pub use config::TrainConfig;
pub use gae::compute_gae;
pub use rollout::{act, arch_for, collect_rollout, input_from_obs, EpisodeStat, RolloutBuffer, VecEnv};
pub use stats::{normalize_rewards, RewardNormalizer, RunningStat};
pub use train::{
    streams, train, train_in_dir, MetricsRecord, TrainOutcome, TrainSinks, CHECKPOINT_FILE, METRICS_FILE, RUN_FILE,
};
pub use update::{normalize_advantages, ppo_update, UpdateStats};
