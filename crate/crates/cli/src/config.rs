//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! family = coinrun
//! seed = 3
//! train.total_timesteps = 500000
//! shift.coin_random_pct = 5
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use misgen::evalkit::PolicyMode;
use misgen::trainer::TrainConfig;
use misgen::worlds::{AmbiguityPhase, CheeseMode, Family, KeyChestRatio, ShiftConfig};
use misgen::{Error, Result};

/// Name of the resolved config written next to every run's outputs.
pub const RESOLVED_FILE: &str = "config.txt";

/// Every recognised key, in the order they are written back out.
pub const KEYS: &[&str] = &[
    "family",
    "seed",
    "out",
    "train.gamma",
    "train.lambda",
    "train.clip",
    "train.entropy_coef",
    "train.value_coef",
    "train.lr",
    "train.rollout_len",
    "train.epochs",
    "train.minibatches",
    "train.num_envs",
    "train.total_timesteps",
    "train.reward_normalization",
    "shift.base",
    "shift.coin_random_pct",
    "shift.cheese_mode",
    "shift.ambiguity_phase",
    "shift.keychest_ratio",
    "eval.episodes",
    "eval.mode",
    "eval.record",
    "sweep.pcts",
    "sweep.seeds_per_point",
    "sweep.reuse",
];

/// Raw key/value pairs, validated against [`KEYS`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected `key = value`, got `{line}`", i + 1)))?;
            let k = k.trim();
            if raw.values.contains_key(k) {
                return Err(Error::Config(format!("{origin}:{}: key `{k}` given twice", i + 1)));
            }
            raw.set(k, v.trim())
                .map_err(|e| Error::Config(format!("{origin}:{}: {}", i + 1, strip(e))))?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Set one key, rejecting names outside [`KEYS`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{pair}`")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("`{key}` = `{v}`: {e}"))))
            .transpose()
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn wrap<T>(raw: &RawConfig, key: &str, r: std::result::Result<T, String>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("`{key}` = `{}`: {e}", raw.get(key).unwrap_or(""))))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn parse_named<T: Copy>(s: &str, all: &[T], name: fn(T) -> &'static str) -> std::result::Result<T, String> {
    all.iter().copied().find(|&v| name(v) == s).ok_or_else(|| {
        let names: Vec<&str> = all.iter().map(|&v| name(v)).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftBase {
    Train,
    Test,
}

impl ShiftBase {
    fn name(self) -> &'static str {
        match self {
            ShiftBase::Train => "train",
            ShiftBase::Test => "test",
        }
    }
}

/// Per-field shift overrides on top of a family's train or test preset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShiftOverrides {
    pub base: Option<ShiftBase>,
    pub coin_random_pct: Option<u8>,
    pub cheese_mode: Option<CheeseMode>,
    pub ambiguity_phase: Option<AmbiguityPhase>,
    pub keychest_ratio: Option<KeyChestRatio>,
}

impl ShiftOverrides {
    /// Resolve for `family`; `default_base` applies when `shift.base` is
    /// unset. Overriding a knob that belongs to another family is an error.
    pub fn resolve(&self, family: Family, default_base: ShiftBase) -> Result<ShiftConfig> {
        let mut s = match self.base.unwrap_or(default_base) {
            ShiftBase::Train => ShiftConfig::train(family),
            ShiftBase::Test => ShiftConfig::test(family),
        };
        let foreign = |key: &str, owner: Family| {
            Err(Error::FamilyMismatch {
                expected: family.name().into(),
                got: format!("{owner} (from `{key}`)"),
            })
        };
        if let Some(p) = self.coin_random_pct {
            if family != Family::CoinRun {
                return foreign("shift.coin_random_pct", Family::CoinRun);
            }
            s.coin_random_pct = p;
        }
        if let Some(m) = self.cheese_mode {
            if family != Family::Maze1 {
                return foreign("shift.cheese_mode", Family::Maze1);
            }
            s.cheese_mode = m;
        }
        if let Some(a) = self.ambiguity_phase {
            if family != Family::Maze2 {
                return foreign("shift.ambiguity_phase", Family::Maze2);
            }
            s.ambiguity_phase = a;
        }
        if let Some(k) = self.keychest_ratio {
            if family != Family::KeysChests {
                return foreign("shift.keychest_ratio", Family::KeysChests);
            }
            s.keychest_ratio = k;
        }
        s.validate()?;
        Ok(s)
    }
}

/// Typed view of a [`RawConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub family: Option<Family>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub train: TrainConfig,
    pub shift: ShiftOverrides,
    pub episodes: usize,
    pub mode: PolicyMode,
    /// Save transcripts of this many leading eval episodes.
    pub record: usize,
    pub pcts: Vec<u8>,
    pub seeds_per_point: usize,
    pub reuse: bool,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let d = TrainConfig::default();
        let sweep = misgen::evalkit::SweepSpec::default();
        let family = match raw.get("family") {
            Some(v) => Some(Family::parse(v).map_err(|e| Error::Config(format!("`family`: {}", strip(e))))?),
            None => None,
        };
        let mut shift = ShiftOverrides::default();
        if let Some(v) = raw.get("shift.base") {
            shift.base = Some(wrap(
                raw,
                "shift.base",
                parse_named(v, &[ShiftBase::Train, ShiftBase::Test], ShiftBase::name),
            )?);
        }
        shift.coin_random_pct = raw.parsed("shift.coin_random_pct")?;
        if let Some(v) = raw.get("shift.cheese_mode") {
            let all = [CheeseMode::FixedCorner, CheeseMode::Random];
            shift.cheese_mode = Some(wrap(raw, "shift.cheese_mode", parse_named(v, &all, CheeseMode::name))?);
        }
        if let Some(v) = raw.get("shift.ambiguity_phase") {
            let all = [AmbiguityPhase::TrainYellowGem, AmbiguityPhase::TestStarVsGem];
            shift.ambiguity_phase = Some(wrap(raw, "shift.ambiguity_phase", parse_named(v, &all, AmbiguityPhase::name))?);
        }
        if let Some(v) = raw.get("shift.keychest_ratio") {
            let all = [KeyChestRatio::ChestsDouble, KeyChestRatio::KeysDouble];
            shift.keychest_ratio = Some(wrap(raw, "shift.keychest_ratio", parse_named(v, &all, KeyChestRatio::name))?);
        }
        let boolean = |key: &str, default: bool| match raw.get(key) {
            Some(v) => wrap(raw, key, parse_bool(v)),
            None => Ok(default),
        };
        let seed = raw.parsed("seed")?.unwrap_or(0);
        let train = TrainConfig {
            gamma: raw.parsed("train.gamma")?.unwrap_or(d.gamma),
            lambda: raw.parsed("train.lambda")?.unwrap_or(d.lambda),
            clip: raw.parsed("train.clip")?.unwrap_or(d.clip),
            entropy_coef: raw.parsed("train.entropy_coef")?.unwrap_or(d.entropy_coef),
            value_coef: raw.parsed("train.value_coef")?.unwrap_or(d.value_coef),
            lr: raw.parsed("train.lr")?.unwrap_or(d.lr),
            rollout_len: raw.parsed("train.rollout_len")?.unwrap_or(d.rollout_len),
            epochs: raw.parsed("train.epochs")?.unwrap_or(d.epochs),
            minibatches: raw.parsed("train.minibatches")?.unwrap_or(d.minibatches),
            num_envs: raw.parsed("train.num_envs")?.unwrap_or(d.num_envs),
            total_timesteps: raw.parsed("train.total_timesteps")?.unwrap_or(d.total_timesteps),
            reward_normalization: boolean("train.reward_normalization", d.reward_normalization)?,
            seed,
        };
        let pcts = match raw.get("sweep.pcts") {
            Some(v) => v
                .split(',')
                .map(|p| p.trim().parse::<u8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("`sweep.pcts` = `{v}`: {e}")))?,
            None => sweep.pcts.clone(),
        };
        let mode = match raw.get("eval.mode") {
            Some(v) => v.parse::<PolicyMode>().map_err(|e| Error::Config(format!("`eval.mode`: {}", strip(e))))?,
            None => PolicyMode::Stochastic,
        };
        Ok(RunConfig {
            family,
            seed,
            out: raw.get("out").map(PathBuf::from),
            train,
            shift,
            episodes: raw.parsed("eval.episodes")?.unwrap_or(sweep.episodes),
            mode,
            record: raw.parsed("eval.record")?.unwrap_or(0),
            pcts,
            seeds_per_point: raw.parsed("sweep.seeds_per_point")?.unwrap_or(sweep.seeds_per_point),
            reuse: boolean("sweep.reuse", sweep.reuse_checkpoints)?,
        })
    }

    pub fn require_family(&self) -> Result<Family> {
        self.family
            .ok_or_else(|| Error::Config("missing required key `family`".into()))
    }

    pub fn require_out(&self) -> Result<PathBuf> {
        self.out
            .clone()
            .ok_or_else(|| Error::Config("missing required key `out` (or pass --out)".into()))
    }
}

fn policy_mode_name(m: PolicyMode) -> &'static str {
    match m {
        PolicyMode::Stochastic => "stochastic",
        PolicyMode::Greedy => "greedy",
    }
}

/// Fully resolved config text. Loading it reproduces the same run.
pub fn render(cfg: &RunConfig, family: Option<Family>, shift: Option<&ShiftConfig>) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    if let Some(f) = family.or(cfg.family) {
        kv("family", f.name().to_string());
    }
    kv("seed", cfg.seed.to_string());
    if let Some(o) = &cfg.out {
        kv("out", o.display().to_string());
    }
    let t = &cfg.train;
    kv("train.gamma", t.gamma.to_string());
    kv("train.lambda", t.lambda.to_string());
    kv("train.clip", t.clip.to_string());
    kv("train.entropy_coef", t.entropy_coef.to_string());
    kv("train.value_coef", t.value_coef.to_string());
    kv("train.lr", t.lr.to_string());
    kv("train.rollout_len", t.rollout_len.to_string());
    kv("train.epochs", t.epochs.to_string());
    kv("train.minibatches", t.minibatches.to_string());
    kv("train.num_envs", t.num_envs.to_string());
    kv("train.total_timesteps", t.total_timesteps.to_string());
    kv("train.reward_normalization", t.reward_normalization.to_string());
    if let Some(sh) = shift {
        kv("shift.base", if sh.is_test() { "test" } else { "train" }.to_string());
        match sh.family {
            Family::CoinRun => kv("shift.coin_random_pct", sh.coin_random_pct.to_string()),
            Family::Maze1 => kv("shift.cheese_mode", sh.cheese_mode.name().to_string()),
            Family::Maze2 => kv("shift.ambiguity_phase", sh.ambiguity_phase.name().to_string()),
            Family::KeysChests => kv("shift.keychest_ratio", sh.keychest_ratio.name().to_string()),
        }
    }
    kv("eval.episodes", cfg.episodes.to_string());
    kv("eval.mode", policy_mode_name(cfg.mode).to_string());
    kv("eval.record", cfg.record.to_string());
    let pcts: Vec<String> = cfg.pcts.iter().map(u8::to_string).collect();
    kv("sweep.pcts", pcts.join(","));
    kv("sweep.seeds_per_point", cfg.seeds_per_point.to_string());
    kv("sweep.reuse", cfg.reuse.to_string());
    s
}
