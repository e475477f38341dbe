//! `misgen`: train, evaluate, sweep and replay.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use misgen::envcore::{render_obs, EpisodeTranscript, RenderMode, Rendered};
use misgen::evalkit::{aggregate, record, run_ablation_sweep, run_episodes, SweepSpec};
use misgen::trainer::{train_in_dir, Checkpoint, MetricsRecord, CHECKPOINT_FILE};
use misgen::worlds::physics::{maze_action, platform_action};
use misgen::worlds::Family;
use misgen::{Error, Result};

use config::{render, RawConfig, RunConfig, ShiftBase, RESOLVED_FILE};

#[derive(Parser)]
#[command(name = "misgen", version, about = "Goal misgeneralization lab: train, evaluate, sweep, replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// key = value config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Top-level seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent; writes checkpoint, metrics and resolved config
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on its family's test distribution
    Eval {
        checkpoint: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Coin-randomization ablation sweep
    Sweep {
        /// Sweep spec in the same key = value format
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Step through a recorded transcript
    Replay {
        transcript: PathBuf,
        #[arg(long, default_value = "ascii")]
        mode: String,
        /// Where rgb frames go (default: next to the transcript)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common, file: Option<&Path>, episodes: Option<usize>) -> Result<RunConfig> {
    let mut raw = match file.or(common.config.as_deref()) {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    for pair in &common.set {
        raw.set_pair(pair)?;
    }
    if let Some(o) = &common.out {
        raw.set("out", &o.display().to_string())?;
    }
    if let Some(s) = common.seed {
        raw.set("seed", &s.to_string())?;
    }
    if let Some(n) = episodes {
        raw.set("eval.episodes", &n.to_string())?;
    }
    RunConfig::from_raw(&raw)
}

fn write_resolved(dir: &Path, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    misgen::write_atomic(&dir.join(RESOLVED_FILE), text.as_bytes())?;
    Ok(())
}

fn log_update(m: &MetricsRecord) {
    if m.update % 10 == 1 || m.mean_return.is_some() && m.update % 10 == 0 {
        eprintln!(
            "update {:>4} step {:>9} return {} entropy {:.3} kl {:.4}",
            m.update,
            m.step,
            m.mean_return.map_or("-".into(), |r| format!("{r:.3}")),
            m.entropy,
            m.kl_estimate
        );
    }
}

fn cmd_train(common: &Common) -> Result<()> {
    let cfg = load_config(common, None, None)?;
    let family = cfg.require_family()?;
    let out = cfg.require_out()?;
    let shift = cfg.shift.resolve(family, ShiftBase::Train)?;
    cfg.train.validate()?;
    write_resolved(&out, &render(&cfg, Some(family), Some(&shift)))?;
    let (ckpt, _) = train_in_dir(&cfg.train, family, &shift, &out, false, &mut log_update)?;
    println!("checkpoint {} ({} steps) written to {}", ckpt.id(), ckpt.timesteps, out.join(CHECKPOINT_FILE).display());
    Ok(())
}

fn read_input(path: &Path, what: &str) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {what} {}: {e}", path.display())))
}

fn cmd_eval(checkpoint: &Path, common: &Common, episodes: Option<usize>) -> Result<()> {
    let cfg = load_config(common, None, episodes)?;
    let out = cfg.require_out()?;
    let ckpt = Checkpoint::decode(&read_input(checkpoint, "checkpoint")?)?;
    if let Some(f) = cfg.family {
        ckpt.check_family(f)?;
    }
    let family = ckpt.family;
    let shift = cfg.shift.resolve(family, ShiftBase::Test)?;
    if cfg.episodes == 0 {
        return Err(Error::Config("`eval.episodes` must be at least 1".into()));
    }
    write_resolved(&out, &render(&cfg, Some(family), Some(&shift)))?;
    let tdir = out.join("transcripts");
    if cfg.record > 0 {
        std::fs::create_dir_all(&tdir)?;
    }
    let records = run_episodes(&ckpt.params, family, &shift, cfg.episodes, cfg.seed, cfg.mode, |i, seed, t| {
        if i < cfg.record {
            t.save(&tdir.join(format!("episode{i:05}.mgt")))?;
        }
        record(i, seed, &t)
    })?;
    let report = aggregate(family, shift, &ckpt.id(), cfg.mode, records)?;
    report.write(&out)?;
    print!("{}", report.table());
    Ok(())
}

fn cmd_sweep(spec: Option<&Path>, common: &Common, episodes: Option<usize>) -> Result<bool> {
    let cfg = load_config(common, spec, episodes)?;
    if let Some(f) = cfg.family {
        if f != Family::CoinRun {
            return Err(Error::FamilyMismatch {
                expected: Family::CoinRun.name().into(),
                got: f.name().into(),
            });
        }
    }
    let out = cfg.require_out()?;
    let sweep = SweepSpec {
        pcts: cfg.pcts.clone(),
        seeds_per_point: cfg.seeds_per_point,
        episodes: cfg.episodes,
        train: cfg.train,
        mode: cfg.mode,
        eval_seed: cfg.seed,
        reuse_checkpoints: cfg.reuse,
    };
    sweep.validate()?;
    write_resolved(&out, &render(&cfg, Some(Family::CoinRun), None))?;
    let report = run_ablation_sweep(&sweep, &out, &mut |line| eprintln!("{line}"))?;
    print!("{}", report.csv());
    let failed = report.failures();
    if failed > 0 {
        eprintln!("{failed} sweep point(s) failed; see sweep.jsonl");
    }
    Ok(failed == 0)
}

fn action_name(family: Family, a: u8) -> &'static str {
    let a = a as usize;
    if family.is_platformer() {
        match a {
            platform_action::LEFT => "left",
            platform_action::RIGHT => "right",
            platform_action::JUMP => "jump",
            platform_action::NOOP => "noop",
            _ => "?",
        }
    } else {
        match a {
            maze_action::UP => "up",
            maze_action::DOWN => "down",
            maze_action::LEFT => "left",
            maze_action::RIGHT => "right",
            maze_action::NOOP => "noop",
            _ => "?",
        }
    }
}

fn cmd_replay(path: &Path, mode: &str, out: Option<&Path>) -> Result<()> {
    let mode: RenderMode = mode.parse()?;
    let t = EpisodeTranscript::decode(&read_input(path, "transcript")?)?;
    let frames_dir = out.map(Path::to_path_buf).unwrap_or_else(|| {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        path.with_file_name(format!("{stem}_frames"))
    });
    println!(
        "{} seed {} shift {:?}, {} steps, return {}",
        t.family,
        t.seed,
        t.shift,
        t.len(),
        t.total_return()
    );
    if mode == RenderMode::Rgb {
        std::fs::create_dir_all(&frames_dir)?;
    }
    for i in 0..=t.len() {
        let header = if i == 0 {
            "step 0 (initial)".to_string()
        } else {
            let s = &t.steps[i - 1];
            format!(
                "step {i} action {} reward {} tags [{}]",
                action_name(t.family, s.action),
                s.reward,
                s.tags.names().join(", ")
            )
        };
        match render_obs(t.observation(i), mode) {
            Rendered::Ascii(text) => println!("{header}\n{text}"),
            Rendered::Rgb(img) => {
                let file = frames_dir.join(format!("frame{i:05}.ppm"));
                misgen::write_atomic(&file, &img.to_ppm())?;
                println!("{header} -> {}", file.display());
            }
        }
    }
    match t.terminal {
        Some(tag) => println!("terminal: {}", tag.name()),
        None => println!("terminal: none"),
    }
    Ok(())
}

/// 2 for bad input (config, file format, family or shape mismatch), 1 for
/// failures while running.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Format { .. } | Error::FamilyMismatch { .. } | Error::Shape(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { common } => cmd_train(common).map(|_| true),
        Command::Eval {
            checkpoint,
            common,
            episodes,
        } => cmd_eval(checkpoint, common, *episodes).map(|_| true),
        Command::Sweep { spec, common, episodes } => cmd_sweep(spec.as_deref(), common, *episodes),
        Command::Replay { transcript, mode, out } => cmd_replay(transcript, mode, out.as_deref()).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
