//! Episode transcripts and the MGT1 file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        4   "MGT1"
//! version      u16 1
//! family       u8
//! seed         u64
//! max_steps    u32
//! shift        4 x u8  coin_random_pct, cheese_mode, ambiguity_phase, keychest_ratio
//! level        width u16, height u16, tiles u8 x (width*height),
//!              spawn x u16, spawn y u16, randomized u8,
//!              object count u16, then per object: kind u8, color u8, shape u8, x u16, y u16
//! step count   u32
//! steps        per step: action u8, reward f32, tags u16
//! terminal     u8  event tag index, 0xFF if the episode was cut short
//! ```
//!
//! Observations are not stored: loading re-simulates the action stream on
//! the embedded level and rejects the file if any reward or tag disagrees.

use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::worlds::{
    AmbiguityPhase, Cell, CheeseMode, Color, Family, KeyChestRatio, LevelSpec, ObjectKind, ObjectSpec, Shape,
    ShiftConfig, Tile,
};
use crate::{Error, Result};

use super::env::{reset, EnvState, EventTag, StepResult, Tags};
use super::obs::Observation;

pub const MAGIC: &[u8; 4] = b"MGT1";
pub const VERSION: u16 = 1;
const NO_TERMINAL: u8 = 0xFF;

#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptStep {
    pub action: u8,
    pub reward: f32,
    pub tags: Tags,
    /// Observation after the action.
    pub observation: Observation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTranscript {
    pub seed: u64,
    pub family: Family,
    pub shift: ShiftConfig,
    pub max_steps: u32,
    pub level: LevelSpec,
    pub initial: Observation,
    pub steps: Vec<TranscriptStep>,
    pub terminal: Option<EventTag>,
}

impl EpisodeTranscript {
    /// Empty transcript positioned at `env`'s current (initial) state.
    pub fn start(env: &EnvState) -> Self {
        Self {
            seed: env.seed(),
            family: env.family(),
            shift: *env.shift(),
            max_steps: env.max_steps(),
            level: env.level().clone(),
            initial: env.observe(),
            steps: Vec::new(),
            terminal: None,
        }
    }

    pub fn push(&mut self, action: usize, r: &StepResult) {
        self.steps.push(TranscriptStep {
            action: action as u8,
            reward: r.reward,
            tags: r.tags,
            observation: r.observation.clone(),
        });
        if r.done {
            self.terminal = r.tags.terminal();
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.action as usize).collect()
    }

    pub fn total_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward as f64).sum()
    }

    /// Union of all tags seen during the episode.
    pub fn all_tags(&self) -> Tags {
        Tags(self.steps.iter().fold(0, |acc, s| acc | s.tags.0))
    }

    /// Observation after `i` steps (0 is the initial one).
    pub fn observation(&self, i: usize) -> &Observation {
        if i == 0 {
            &self.initial
        } else {
            &self.steps[i - 1].observation
        }
    }

    /// Regenerate the level from `(family, seed, shift)` and replay the
    /// recorded actions, producing a fresh transcript.
    pub fn resimulate(&self) -> Result<Self> {
        let (env, _) = reset(self.family, self.seed, &self.shift)?;
        replay_actions(env.with_max_steps(self.max_steps), &self.actions())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u16(VERSION);
        w.u8(self.family.id());
        w.u64(self.seed);
        w.u32(self.max_steps);
        w.u8(self.shift.coin_random_pct);
        w.u8(self.shift.cheese_mode as u8);
        w.u8(self.shift.ambiguity_phase as u8);
        w.u8(self.shift.keychest_ratio as u8);
        encode_level(&mut w, &self.level);
        w.u32(self.steps.len() as u32);
        for s in &self.steps {
            w.u8(s.action);
            w.f32(s.reward);
            w.u16(s.tags.0);
        }
        w.u8(self.terminal.map_or(NO_TERMINAL, |t| t as u8));
        w.buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4, "magic")? != MAGIC {
            return Err(r.fail_at(0, "bad magic, expected MGT1"));
        }
        let at = r.pos();
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(r.fail_at(at, format!("unsupported version {version}")));
        }
        let at = r.pos();
        let family = Family::from_id(r.u8("family")?).ok_or_else(|| r.fail_at(at, "unknown family id"))?;
        let seed = r.u64("seed")?;
        let max_steps = r.u32("max_steps")?;
        let at = r.pos();
        let shift = ShiftConfig {
            family,
            coin_random_pct: r.u8("coin_random_pct")?,
            cheese_mode: CheeseMode::from_u8(r.u8("cheese_mode")?).ok_or_else(|| r.fail_at(at + 1, "bad cheese_mode"))?,
            ambiguity_phase: AmbiguityPhase::from_u8(r.u8("ambiguity_phase")?)
                .ok_or_else(|| r.fail_at(at + 2, "bad ambiguity_phase"))?,
            keychest_ratio: KeyChestRatio::from_u8(r.u8("keychest_ratio")?)
                .ok_or_else(|| r.fail_at(at + 3, "bad keychest_ratio"))?,
        };
        shift.validate().map_err(|e| r.fail_at(at, e.to_string()))?;
        let level = decode_level(&mut r, family)?;
        let n = r.u32("step count")? as usize;
        let mut recorded = Vec::with_capacity(n.min(1 << 16));
        let mut offsets = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            offsets.push(r.pos());
            let action = r.u8("action")?;
            let reward = r.f32("reward")?;
            let tags = Tags(r.u16("tags")?);
            recorded.push((action, reward, tags));
        }
        let at = r.pos();
        let terminal = match r.u8("terminal")? {
            NO_TERMINAL => None,
            t => Some(EventTag::from_u8(t).ok_or_else(|| r.fail_at(at, "unknown terminal tag"))?),
        };
        r.expect_end()?;

        let env = EnvState::from_level(level, shift, seed).with_max_steps(max_steps);
        let actions: Vec<usize> = recorded.iter().map(|s| s.0 as usize).collect();
        let t = replay_actions(env, &actions).map_err(|e| r.fail_at(offsets.last().copied().unwrap_or(at), e.to_string()))?;
        for (i, (s, (_, reward, tags))) in t.steps.iter().zip(&recorded).enumerate() {
            if s.reward.to_bits() != reward.to_bits() || s.tags != *tags {
                return Err(r.fail_at(
                    offsets[i],
                    format!(
                        "step {i}: recorded reward {reward} tags {:?}, re-simulated {} {:?}",
                        tags.names(),
                        s.reward,
                        s.tags.names()
                    ),
                ));
            }
        }
        if t.terminal != terminal {
            return Err(r.fail_at(at, "terminal tag does not match re-simulation"));
        }
        Ok(Self { seed, ..t })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::write_atomic(path, &self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

/// Step `env` through `actions`, recording everything. Stops early (without
/// error) only if the episode ends before the actions run out.
pub fn replay_actions(mut env: EnvState, actions: &[usize]) -> Result<EpisodeTranscript> {
    let mut t = EpisodeTranscript::start(&env);
    for (i, &a) in actions.iter().enumerate() {
        if env.is_done() {
            return Err(Error::Env(format!("episode ended before action {i}")));
        }
        let r = env.step(a)?;
        t.push(a, &r);
    }
    Ok(t)
}

fn encode_level(w: &mut Writer, l: &LevelSpec) {
    w.u16(l.width as u16);
    w.u16(l.height as u16);
    for t in &l.tiles {
        w.u8(*t as u8);
    }
    w.u16(l.spawn.x as u16);
    w.u16(l.spawn.y as u16);
    w.u8(l.randomized as u8);
    w.u16(l.objects.len() as u16);
    for o in &l.objects {
        w.u8(o.kind as u8);
        w.u8(o.color as u8);
        w.u8(o.shape as u8);
        w.u16(o.cell.x as u16);
        w.u16(o.cell.y as u16);
    }
}

fn decode_level(r: &mut Reader, family: Family) -> Result<LevelSpec> {
    let at = r.pos();
    let width = r.u16("level width")? as usize;
    let height = r.u16("level height")? as usize;
    if width == 0 || height == 0 {
        return Err(r.fail_at(at, "empty level"));
    }
    let at = r.pos();
    let raw = r.take(width * height, "tiles")?;
    let mut tiles = Vec::with_capacity(raw.len());
    for (i, &b) in raw.iter().enumerate() {
        tiles.push(Tile::from_u8(b).ok_or_else(|| r.fail_at(at + i, format!("bad tile byte {b}")))?);
    }
    let at = r.pos();
    let spawn = Cell::new(r.u16("spawn x")? as usize, r.u16("spawn y")? as usize);
    if spawn.x >= width || spawn.y >= height {
        return Err(r.fail_at(at, "spawn out of bounds"));
    }
    let randomized = r.u8("randomized")? != 0;
    let count = r.u16("object count")? as usize;
    let mut objects = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos();
        let kind = ObjectKind::from_u8(r.u8("object kind")?).ok_or_else(|| r.fail_at(at, "bad object kind"))?;
        let color = Color::from_u8(r.u8("object color")?).ok_or_else(|| r.fail_at(at + 1, "bad object color"))?;
        let shape = Shape::from_u8(r.u8("object shape")?).ok_or_else(|| r.fail_at(at + 2, "bad object shape"))?;
        let cell = Cell::new(r.u16("object x")? as usize, r.u16("object y")? as usize);
        if cell.x >= width || cell.y >= height {
            return Err(r.fail_at(at + 3, "object out of bounds"));
        }
        objects.push(ObjectSpec { kind, color, shape, cell });
    }
    Ok(LevelSpec {
        family,
        width,
        height,
        tiles,
        objects,
        spawn,
        randomized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngStream;

    fn random_episode(family: Family, seed: u64) -> EpisodeTranscript {
        let (env, _) = reset(family, seed, &ShiftConfig::test(family)).unwrap();
        let mut env = env;
        let mut rng = RngStream::new(seed, 9);
        let mut t = EpisodeTranscript::start(&env);
        while !env.is_done() {
            let a = rng.below(family.num_actions() as u64) as usize;
            let r = env.step(a).unwrap();
            t.push(a, &r);
        }
        t
    }

    #[test]
    fn encode_decode_round_trip() {
        for f in Family::ALL {
            let t = random_episode(f, 11);
            let bytes = t.encode();
            let back = EpisodeTranscript::decode(&bytes).unwrap();
            assert_eq!(back, t);
            assert_eq!(back.encode(), bytes);
            assert_eq!(t.resimulate().unwrap(), t);
        }
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = random_episode(Family::Maze1, 2).encode();
        let cut = bytes.len() - 3;
        match EpisodeTranscript::decode(&bytes[..cut]) {
            Err(Error::Format { offset, .. }) => assert!(offset as usize <= cut),
            other => panic!("{other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(EpisodeTranscript::decode(&bad), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn tampered_reward_is_rejected() {
        let t = random_episode(Family::CoinRun, 4);
        let mut bytes = t.encode();
        // reward of the first step sits after the action byte
        let first_step = bytes.len() - 1 - 7 * t.len();
        bytes[first_step + 1..first_step + 5].copy_from_slice(&7.0f32.to_le_bytes());
        assert!(matches!(EpisodeTranscript::decode(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn zero_step_transcript() {
        let (env, obs) = reset(Family::Maze2, 3, &ShiftConfig::test(Family::Maze2)).unwrap();
        let t = EpisodeTranscript::start(&env);
        let back = EpisodeTranscript::decode(&t.encode()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.initial, obs);
        assert_eq!(back.terminal, None);
    }
}
