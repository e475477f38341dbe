//! Coin-randomization ablation: train one agent per randomization rate,
//! test each on fully randomized coins.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::trainer::{train_in_dir, MetricsRecord, TrainConfig};
use crate::worlds::{Family, ShiftConfig};
use crate::{Error, Result};

use super::deploy::PolicyMode;
use super::report::{aggregate, evaluate, EvalReport, CSV_HEADER};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Training coin_random_pct values.
    pub pcts: Vec<u8>,
    pub seeds_per_point: usize,
    pub episodes: usize,
    pub train: TrainConfig,
    pub mode: PolicyMode,
    pub eval_seed: u64,
    /// Skip training when a finished run with the same settings is on disk.
    pub reuse_checkpoints: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            pcts: vec![0, 1, 2, 5, 10],
            seeds_per_point: 1,
            episodes: 1000,
            train: TrainConfig::default(),
            mode: PolicyMode::Stochastic,
            eval_seed: 0,
            reuse_checkpoints: false,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.pcts.is_empty() {
            return Err(Error::Config("sweep needs at least one percentage".into()));
        }
        if let Some(p) = self.pcts.iter().find(|&&p| p > 100) {
            return Err(Error::Config(format!("percentage {p} outside [0, 100]")));
        }
        if self.episodes == 0 || self.seeds_per_point == 0 {
            return Err(Error::Config("episodes and seeds_per_point must be at least 1".into()));
        }
        self.train.validate()
    }

    pub fn point_dir(&self, out: &Path, p: u8, seed_index: usize) -> PathBuf {
        out.join(format!("p{p}")).join(format!("seed{seed_index}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub p: u8,
    pub seed_index: usize,
    pub train_seed: u64,
    /// Evaluation summary, or the error that stopped this point.
    pub outcome: std::result::Result<EvalReport, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub points: Vec<PointResult>,
    /// One pooled report per training percentage whose points all succeeded.
    pub combined: Vec<(u8, EvalReport)>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }

    pub fn csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for (p, r) in &self.combined {
            s.push_str(&r.csv_row(*p));
            s.push('\n');
        }
        s
    }
}

fn run_point(
    spec: &SweepSpec,
    out: &Path,
    p: u8,
    seed_index: usize,
    log: &mut dyn FnMut(&str),
) -> Result<EvalReport> {
    let dir = spec.point_dir(out, p, seed_index);
    let shift = ShiftConfig::train(Family::CoinRun).with_coin_pct(p);
    let cfg = TrainConfig {
        seed: spec.train.seed + seed_index as u64,
        ..spec.train
    };
    let mut on_update = |m: &MetricsRecord| {
        log(&format!(
            "p={p} seed={seed_index} step={} return={} entropy={:.3}",
            m.step,
            m.mean_return.map_or("-".into(), |r| format!("{r:.3}")),
            m.entropy
        ))
    };
    let (ckpt, reused) = train_in_dir(&cfg, Family::CoinRun, &shift, &dir, spec.reuse_checkpoints, &mut on_update)?;
    if reused {
        log(&format!("p={p} seed={seed_index}: reusing finished run in {}", dir.display()));
    }
    let test = ShiftConfig::test(Family::CoinRun);
    let report = evaluate(&ckpt.params, Family::CoinRun, &test, spec.episodes, spec.eval_seed, spec.mode, &ckpt.id())?;
    report.write(&dir.join("eval"))?;
    Ok(report)
}

/// Train and evaluate every `(p, seed)` point. A failing point is recorded
/// and the sweep moves on.
pub fn run_ablation_sweep(spec: &SweepSpec, out: &Path, log: &mut dyn FnMut(&str)) -> Result<SweepReport> {
    spec.validate()?;
    std::fs::create_dir_all(out)?;
    let mut points = Vec::new();
    let mut combined = Vec::new();
    let mut jsonl = String::new();
    for &p in &spec.pcts {
        let mut pooled = Vec::new();
        let mut all_ok = true;
        for s in 0..spec.seeds_per_point {
            let outcome = run_point(spec, out, p, s, log).map_err(|e| e.to_string());
            match &outcome {
                Ok(r) => pooled.extend(r.records.iter().cloned().map(|mut rec| {
                    rec.episode += s * spec.episodes;
                    rec
                })),
                Err(e) => {
                    log(&format!("p={p} seed={s}: FAILED: {e}"));
                    all_ok = false;
                }
            }
            let point = PointResult {
                p,
                seed_index: s,
                train_seed: spec.train.seed + s as u64,
                outcome,
            };
            jsonl.push_str(&serde_json::to_string(&point).map_err(std::io::Error::from)?);
            jsonl.push('\n');
            points.push(point);
        }
        if all_ok {
            let r = aggregate(
                Family::CoinRun,
                ShiftConfig::test(Family::CoinRun),
                &format!("sweep-p{p}"),
                spec.mode,
                pooled,
            )?;
            combined.push((p, r));
        }
    }
    let report = SweepReport { points, combined };
    crate::write_atomic(&out.join("sweep.jsonl"), jsonl.as_bytes())?;
    crate::write_atomic(&out.join("sweep.csv"), report.csv().as_bytes())?;
    Ok(report)
}
