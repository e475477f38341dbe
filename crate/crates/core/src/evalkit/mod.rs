//! Policy deployment on shifted levels, outcome classification, reports,
//! and the coin-randomization ablation sweep.

pub mod deploy;
pub mod outcome;
pub mod report;
pub mod sweep;

pub use deploy::{episode_seed, rollout_policy, run_episodes, thread_pool, PolicyMode, EVAL_CHUNK};
pub use outcome::{
    classify, classify_coinrun, classify_keyschests, classify_maze1, classify_maze2, keyschests_metrics, Detail,
    KeysChestsMetrics, Label, OutcomeLabel, DWELL_STEPS,
};
pub use report::{aggregate, evaluate, record, EpisodeRecord, EvalReport, LabelRates, CSV_HEADER};
pub use sweep::{run_ablation_sweep, PointResult, SweepReport, SweepSpec};
