//! Objective-robustness laboratory.
//!
//! Trains small actor-critic agents with PPO on four procedurally generated
//! world families, deploys them on shifted variants of those worlds, and
//! sorts every test episode into "got the true reward", "competently pursued
//! something else", or "failed incompetently".
//!
//! Module map:
//!
//! * [`numkit`]: tensors, the fixed conv actor-critic with hand-written
//!   reverse-mode gradients, Adam, categorical helpers, counter-based RNG.
//! * [`worlds`]: level generators, movement rules and reachability.
//! * [`envcore`]: reset/step contract, observation encoding, transcripts.
//! * [`trainer`]: rollouts, reward normalization, GAE, clipped PPO updates,
//!   checkpoints and metrics.
//! * [`evalkit`]: policy deployment, outcome classification, reports, and
//!   the coin-randomization ablation sweep.

mod codec;
pub mod envcore;
pub mod error;
pub mod evalkit;
pub mod numkit;
pub mod trainer;
pub mod worlds;

pub use error::{Error, Result};

/// Write `bytes` to `path` atomically (write a sibling temp file, then rename).
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = path.parent().unwrap_or_else(|| std::path::Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
