use serde::{Deserialize, Serialize};

use crate::numkit::RngStream;
use crate::worlds::physics::{at_level_end, maze_move, platform_tick, Body};
use crate::worlds::{generate, Cell, Family, LevelSpec, ObjectKind, ObjectSpec, ShiftConfig, Tile};
use crate::{Error, Result};

use super::obs::Observation;

/// Reward per goal event; every other transition pays 0.
pub const GOAL_REWARD: f32 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EventTag {
    CoinCollected = 0,
    CheeseReached = 1,
    /// The Maze2 training object (yellow gem) was reached.
    GemReached = 2,
    StarReached = 3,
    RedGemReached = 4,
    KeyCollected = 5,
    ChestOpened = 6,
    Died = 7,
    ReachedLevelEnd = 8,
    Timeout = 9,
}

impl EventTag {
    pub const ALL: [EventTag; 10] = [
        EventTag::CoinCollected,
        EventTag::CheeseReached,
        EventTag::GemReached,
        EventTag::StarReached,
        EventTag::RedGemReached,
        EventTag::KeyCollected,
        EventTag::ChestOpened,
        EventTag::Died,
        EventTag::ReachedLevelEnd,
        EventTag::Timeout,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EventTag::CoinCollected => "coin_collected",
            EventTag::CheeseReached => "cheese_reached",
            EventTag::GemReached => "gem_reached",
            EventTag::StarReached => "star_reached",
            EventTag::RedGemReached => "red_gem_reached",
            EventTag::KeyCollected => "key_collected",
            EventTag::ChestOpened => "chest_opened",
            EventTag::Died => "died",
            EventTag::ReachedLevelEnd => "reached_level_end",
            EventTag::Timeout => "timeout",
        }
    }

    /// Tags that pay [`GOAL_REWARD`].
    pub fn is_rewarding(self) -> bool {
        matches!(
            self,
            EventTag::CoinCollected | EventTag::CheeseReached | EventTag::GemReached | EventTag::ChestOpened
        )
    }

    /// Tags that may end an episode (goal, death, or timeout).
    pub fn is_terminal_kind(self) -> bool {
        !matches!(self, EventTag::KeyCollected)
    }
}

/// Set of [`EventTag`]s as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tags(pub u16);

impl Tags {
    pub fn insert(&mut self, t: EventTag) {
        self.0 |= 1 << t as u8;
    }

    pub fn contains(&self, t: EventTag) -> bool {
        self.0 & (1 << t as u8) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = EventTag> + '_ {
        EventTag::ALL.into_iter().filter(|t| self.contains(*t))
    }

    pub fn rewarding_count(&self) -> usize {
        self.iter().filter(|t| t.is_rewarding()).count()
    }

    /// The tag that ended the episode, by precedence goal > death > timeout.
    pub fn terminal(&self) -> Option<EventTag> {
        self.iter().find(|t| t.is_terminal_kind())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.iter().map(|t| t.name()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f32,
    pub done: bool,
    pub tags: Tags,
}

/// One live episode.
#[derive(Clone, Debug)]
pub struct EnvState {
    family: Family,
    shift: ShiftConfig,
    seed: u64,
    level: LevelSpec,
    body: Body,
    live: Vec<ObjectSpec>,
    keys_held: u32,
    keys_collected: u32,
    chests_opened: u32,
    steps: u32,
    max_steps: u32,
    done: bool,
}

/// Start an episode on the level drawn from `(family, seed, shift)`.
pub fn reset(family: Family, seed: u64, shift: &ShiftConfig) -> Result<(EnvState, Observation)> {
    let level = generate(family, seed, shift)?;
    let env = EnvState::from_level(level, *shift, seed);
    let obs = env.observe();
    Ok((env, obs))
}

impl EnvState {
    pub fn from_level(level: LevelSpec, shift: ShiftConfig, seed: u64) -> Self {
        let family = level.family;
        Self {
            family,
            shift,
            seed,
            body: Body {
                pos: level.spawn,
                rise: 0,
            },
            live: level.objects.clone(),
            level,
            keys_held: 0,
            keys_collected: 0,
            chests_opened: 0,
            steps: 0,
            max_steps: family.max_steps(),
            done: false,
        }
    }

    pub fn with_max_steps(mut self, max_steps: u32) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn shift(&self) -> &ShiftConfig {
        &self.shift
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn level(&self) -> &LevelSpec {
        &self.level
    }
    pub fn agent(&self) -> Cell {
        self.body.pos
    }
    pub fn live_objects(&self) -> &[ObjectSpec] {
        &self.live
    }
    pub fn keys_held(&self) -> u32 {
        self.keys_held
    }
    pub fn keys_collected(&self) -> u32 {
        self.keys_collected
    }
    pub fn chests_opened(&self) -> u32 {
        self.chests_opened
    }
    pub fn steps(&self) -> u32 {
        self.steps
    }
    pub fn max_steps(&self) -> u32 {
        self.max_steps
    }
    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn observe(&self) -> Observation {
        Observation::encode(&self.level, self.body.pos, &self.live, self.keys_held)
    }

    fn take_object_at(&mut self, c: Cell, kind: ObjectKind) -> Option<ObjectSpec> {
        let i = self.live.iter().position(|o| o.cell == c && o.kind == kind)?;
        Some(self.live.remove(i))
    }

    fn object_at(&self, c: Cell) -> Option<&ObjectSpec> {
        self.live.iter().find(|o| o.cell == c)
    }

    fn openable_chest_remains(&self) -> bool {
        let chests = self.live.iter().any(|o| o.kind == ObjectKind::Chest);
        let keys = self.keys_held > 0 || self.live.iter().any(|o| o.kind == ObjectKind::Key);
        chests && keys
    }

    /// Advance one tick.
    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::Env("step called on a finished episode".into()));
        }
        if action >= self.family.num_actions() {
            return Err(Error::Env(format!(
                "action {action} out of range for {} ({} actions)",
                self.family,
                self.family.num_actions()
            )));
        }
        self.steps += 1;
        let mut tags = Tags::default();
        match self.family {
            Family::CoinRun => self.step_platformer(action, &mut tags),
            Family::Maze1 | Family::Maze2 => self.step_maze(action, &mut tags),
            Family::KeysChests => self.step_keyschests(action, &mut tags),
        }
        if !self.done && self.steps >= self.max_steps {
            tags.insert(EventTag::Timeout);
            self.done = true;
        }
        Ok(StepResult {
            observation: self.observe(),
            reward: GOAL_REWARD * tags.rewarding_count() as f32,
            done: self.done,
            tags,
        })
    }

    fn step_platformer(&mut self, action: usize, tags: &mut Tags) {
        let tick = platform_tick(&self.level, self.body, action);
        let coin = self.live.iter().find(|o| o.kind == ObjectKind::Coin).map(|o| o.cell);
        for c in tick.entered.iter().flatten() {
            if Some(*c) == coin {
                self.body = Body { pos: *c, rise: 0 };
                self.take_object_at(*c, ObjectKind::Coin);
                tags.insert(EventTag::CoinCollected);
                self.done = true;
                return;
            }
            if self.level.tile(*c) == Tile::Hazard {
                break;
            }
        }
        self.body = tick.body;
        if tick.died {
            tags.insert(EventTag::Died);
            self.done = true;
        } else if at_level_end(&self.level, self.body.pos) {
            tags.insert(EventTag::ReachedLevelEnd);
            self.done = true;
        }
    }

    fn step_maze(&mut self, action: usize, tags: &mut Tags) {
        self.body.pos = maze_move(&self.level, self.body.pos, action);
        let Some(obj) = self.object_at(self.body.pos).copied() else {
            return;
        };
        let tag = match obj.kind {
            ObjectKind::Cheese => Some(EventTag::CheeseReached),
            ObjectKind::Composite if obj.is_yellow_gem() => Some(EventTag::GemReached),
            ObjectKind::Composite if obj.is_yellow_star() => Some(EventTag::StarReached),
            ObjectKind::Composite if obj.is_red_gem() => Some(EventTag::RedGemReached),
            _ => None,
        };
        if let Some(tag) = tag {
            tags.insert(tag);
            self.done = true;
        }
    }

    fn step_keyschests(&mut self, action: usize, tags: &mut Tags) {
        self.body.pos = maze_move(&self.level, self.body.pos, action);
        let pos = self.body.pos;
        if self.take_object_at(pos, ObjectKind::Key).is_some() {
            self.keys_held += 1;
            self.keys_collected += 1;
            tags.insert(EventTag::KeyCollected);
        } else if self.keys_held > 0 && self.take_object_at(pos, ObjectKind::Chest).is_some() {
            self.keys_held -= 1;
            self.chests_opened += 1;
            tags.insert(EventTag::ChestOpened);
        }
        if !self.openable_chest_remains() {
            self.done = true;
        }
    }
}

/// Step every env; envs that finish are reset with a fresh seed from `seeds`.
pub fn batch_step(envs: &mut [EnvState], actions: &[usize], seeds: &mut RngStream) -> Result<Vec<StepResult>> {
    if envs.len() != actions.len() {
        return Err(Error::Env(format!(
            "{} actions for {} environments",
            actions.len(),
            envs.len()
        )));
    }
    let mut out = Vec::with_capacity(envs.len());
    for (env, &a) in envs.iter_mut().zip(actions) {
        let r = env.step(a)?;
        if r.done {
            let seed = seeds.next_u64();
            let (fresh, _) = reset(env.family, seed, &env.shift)?;
            *env = fresh.with_max_steps(env.max_steps);
        }
        out.push(r);
    }
    Ok(out)
}
