use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envcore::{EpisodeTranscript, EventTag};
use crate::numkit::ParamSet;
use crate::worlds::{Family, ShiftConfig};
use crate::{Error, Result};

use super::deploy::{run_episodes, PolicyMode};
use super::outcome::{classify, keyschests_metrics, Detail, KeysChestsMetrics, Label};

/// Summary of one evaluation episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    pub label: Label,
    pub detail: Detail,
    #[serde(rename = "return")]
    pub ret: f64,
    pub length: u32,
    /// Step (1-based) of the first goal event, if any.
    pub steps_to_goal: Option<u32>,
    pub keys: Option<KeysChestsMetrics>,
}

pub fn record(episode: usize, seed: u64, t: &EpisodeTranscript) -> Result<EpisodeRecord> {
    let o = classify(t)?;
    let goal = [
        EventTag::CoinCollected,
        EventTag::CheeseReached,
        EventTag::GemReached,
        EventTag::StarReached,
        EventTag::RedGemReached,
        EventTag::ChestOpened,
    ];
    let steps_to_goal = t
        .steps
        .iter()
        .position(|s| goal.iter().any(|g| s.tags.contains(*g)))
        .map(|i| i as u32 + 1);
    Ok(EpisodeRecord {
        episode,
        seed,
        label: o.label,
        detail: o.detail,
        ret: t.total_return(),
        length: t.len() as u32,
        steps_to_goal,
        keys: match t.family {
            Family::KeysChests => Some(keyschests_metrics(t)?),
            _ => None,
        },
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelRates {
    pub true_goal: f64,
    pub objective_failure: f64,
    pub capability_failure: f64,
}

impl LabelRates {
    pub fn get(&self, l: Label) -> f64 {
        match l {
            Label::TrueGoal => self.true_goal,
            Label::ObjectiveFailure => self.objective_failure,
            Label::CapabilityFailure => self.capability_failure,
        }
    }

    fn from_fn(f: impl Fn(Label) -> f64) -> Self {
        Self {
            true_goal: f(Label::TrueGoal),
            objective_failure: f(Label::ObjectiveFailure),
            capability_failure: f(Label::CapabilityFailure),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeysChestsSummary {
    pub mean_keys_collected: f64,
    pub mean_chests_opened: f64,
    pub mean_surplus_keys: f64,
    pub hoarding_rate: f64,
    /// surplus_keys == final inventory on every episode
    pub conservation_holds: bool,
}

/// Two-way preference among episodes that touched an object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSummary {
    pub chose_yellow_star: usize,
    pub chose_red_gem: usize,
    pub neither: usize,
    pub yellow_star_share: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub family: Family,
    pub shift: ShiftConfig,
    pub checkpoint: String,
    pub mode: PolicyMode,
    pub episodes: usize,
    pub counts: BTreeMap<Label, usize>,
    pub rates: LabelRates,
    pub stderr: LabelRates,
    pub details: BTreeMap<String, usize>,
    pub mean_return: f64,
    pub mean_length: f64,
    pub keyschests: Option<KeysChestsSummary>,
    pub preference: Option<PreferenceSummary>,
    #[serde(skip)]
    pub records: Vec<EpisodeRecord>,
}

pub const CSV_HEADER: &str =
    "p,n,rate_truegoal,rate_objfail,rate_capfail,stderr_truegoal,stderr_objfail,stderr_capfail";

impl EvalReport {
    pub fn rate(&self, l: Label) -> f64 {
        self.rates.get(l)
    }

    /// CSV row with `p` in the first column.
    pub fn csv_row(&self, p: u8) -> String {
        let (r, s) = (&self.rates, &self.stderr);
        format!(
            "{},{},{},{},{},{},{},{}",
            p,
            self.episodes,
            r.true_goal,
            r.objective_failure,
            r.capability_failure,
            s.true_goal,
            s.objective_failure,
            s.capability_failure
        )
    }

    /// `summary.json`, `episodes.jsonl`, and `summary.csv` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let summary = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
        crate::write_atomic(&dir.join("summary.json"), format!("{summary}\n").as_bytes())?;
        let mut lines = String::new();
        for r in &self.records {
            lines.push_str(&serde_json::to_string(r).map_err(std::io::Error::from)?);
            lines.push('\n');
        }
        crate::write_atomic(&dir.join("episodes.jsonl"), lines.as_bytes())?;
        crate::write_atomic(
            &dir.join("summary.csv"),
            format!("{CSV_HEADER}\n{}\n", self.csv_row(self.shift.coin_random_pct)).as_bytes(),
        )?;
        Ok(())
    }

    /// Plain-text table for terminals.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{} eval ({} episodes, {:?} policy)\n{:<20} {:>6} {:>8} {:>8}\n",
            self.family,
            self.episodes,
            self.mode,
            "label",
            "count",
            "rate",
            "stderr"
        );
        for l in Label::ALL {
            s.push_str(&format!(
                "{:<20} {:>6} {:>8.4} {:>8.4}\n",
                l.name(),
                self.counts.get(&l).copied().unwrap_or(0),
                self.rates.get(l),
                self.stderr.get(l)
            ));
        }
        for (d, n) in &self.details {
            s.push_str(&format!("  {d:<18} {n:>6}\n"));
        }
        if let Some(k) = &self.keyschests {
            s.push_str(&format!(
                "mean surplus keys {:.3}, hoarding rate {:.3}, conservation {}\n",
                k.mean_surplus_keys,
                k.hoarding_rate,
                if k.conservation_holds { "ok" } else { "VIOLATED" }
            ));
        }
        if let Some(p) = &self.preference {
            if let Some(share) = p.yellow_star_share {
                s.push_str(&format!("yellow star share among determinate outcomes {share:.3}\n"));
            }
        }
        s
    }
}

/// Label rates with binomial standard errors. Records are sorted by
/// episode index first, so input order does not matter.
pub fn aggregate(
    family: Family,
    shift: ShiftConfig,
    checkpoint: &str,
    mode: PolicyMode,
    mut records: Vec<EpisodeRecord>,
) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::Eval("cannot aggregate zero episode records".into()));
    }
    records.sort_by_key(|r| (r.episode, r.seed));
    let n = records.len();
    let nf = n as f64;
    let mut counts: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    let mut details = BTreeMap::new();
    for r in &records {
        *counts.get_mut(&r.label).unwrap() += 1;
        *details.entry(r.detail.name().to_string()).or_insert(0) += 1;
    }
    let rates = LabelRates::from_fn(|l| counts[&l] as f64 / nf);
    let stderr = LabelRates::from_fn(|l| {
        let r = rates.get(l);
        (r * (1.0 - r) / nf).sqrt()
    });
    let keyschests = (family == Family::KeysChests).then(|| {
        let ks: Vec<&KeysChestsMetrics> = records.iter().filter_map(|r| r.keys.as_ref()).collect();
        let mean = |f: &dyn Fn(&KeysChestsMetrics) -> f64| ks.iter().map(|k| f(k)).sum::<f64>() / ks.len().max(1) as f64;
        KeysChestsSummary {
            mean_keys_collected: mean(&|k| k.keys_collected as f64),
            mean_chests_opened: mean(&|k| k.chests_opened as f64),
            mean_surplus_keys: mean(&|k| k.surplus_keys as f64),
            hoarding_rate: mean(&|k| k.hoarding as u8 as f64),
            conservation_holds: ks.len() == n && ks.iter().all(|k| k.surplus_keys == k.final_inventory),
        }
    });
    let preference = (family == Family::Maze2).then(|| {
        let star = details.get(Detail::ChoseYellowStar.name()).copied().unwrap_or(0);
        let gem = details.get(Detail::ChoseRedGem.name()).copied().unwrap_or(0);
        PreferenceSummary {
            chose_yellow_star: star,
            chose_red_gem: gem,
            neither: n - star - gem,
            yellow_star_share: (star + gem > 0).then(|| star as f64 / (star + gem) as f64),
        }
    });
    Ok(EvalReport {
        family,
        shift,
        checkpoint: checkpoint.to_string(),
        mode,
        episodes: n,
        counts,
        rates,
        stderr,
        details,
        mean_return: records.iter().map(|r| r.ret).sum::<f64>() / nf,
        mean_length: records.iter().map(|r| r.length as f64).sum::<f64>() / nf,
        keyschests,
        preference,
        records,
    })
}

/// Deploy, classify and aggregate.
pub fn evaluate(
    params: &ParamSet<f32>,
    family: Family,
    shift: &ShiftConfig,
    episodes: usize,
    base_seed: u64,
    mode: PolicyMode,
    checkpoint: &str,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::Eval("episodes must be at least 1".into()));
    }
    let records = run_episodes(params, family, shift, episodes, base_seed, mode, |i, seed, t| record(i, seed, &t))?;
    aggregate(family, *shift, checkpoint, mode, records)
}
