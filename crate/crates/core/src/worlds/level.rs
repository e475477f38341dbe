use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The four experiment families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CoinRun,
    Maze1,
    Maze2,
    KeysChests,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::CoinRun, Family::Maze1, Family::Maze2, Family::KeysChests];

    pub fn id(self) -> u8 {
        match self {
            Family::CoinRun => 0,
            Family::Maze1 => 1,
            Family::Maze2 => 2,
            Family::KeysChests => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::CoinRun => "coinrun",
            Family::Maze1 => "maze1",
            Family::Maze2 => "maze2",
            Family::KeysChests => "keyschests",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown family `{s}` (coinrun|maze1|maze2|keyschests)")))
    }

    pub fn is_platformer(self) -> bool {
        self == Family::CoinRun
    }

    /// Platformer: left, right, jump, no-op. Mazes: up, down, left, right, no-op.
    pub fn num_actions(self) -> usize {
        if self.is_platformer() {
            4
        } else {
            5
        }
    }

    pub fn max_steps(self) -> u32 {
        if self.is_platformer() {
            512
        } else {
            256
        }
    }

    /// Tile grid `(width, height)`.
    pub fn grid_size(self) -> (usize, usize) {
        if self.is_platformer() {
            (PLATFORMER_WIDTH, PLATFORMER_HEIGHT)
        } else {
            let t = 2 * MAZE_CELLS - 1;
            (t, t)
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const PLATFORMER_WIDTH: usize = 16;
pub const PLATFORMER_HEIGHT: usize = 10;
/// Maze cells per side; the tile lattice is `2n − 1` wide.
pub const MAZE_CELLS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Tile {
    Floor = 0,
    Wall = 1,
    Hazard = 2,
}

impl Tile {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Tile::Floor),
            1 => Some(Tile::Wall),
            2 => Some(Tile::Hazard),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum ObjectKind {
    Coin = 0,
    Cheese = 1,
    Key = 2,
    Chest = 3,
    Composite = 4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Color {
    None = 0,
    Yellow = 1,
    Red = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Shape {
    None = 0,
    Gem = 1,
    Star = 2,
}

impl ObjectKind {
    pub fn from_u8(v: u8) -> Option<Self> {
        use ObjectKind::*;
        [Coin, Cheese, Key, Chest, Composite].get(v as usize).copied()
    }
}

impl Color {
    pub fn from_u8(v: u8) -> Option<Self> {
        [Color::None, Color::Yellow, Color::Red].get(v as usize).copied()
    }
}

impl Shape {
    pub fn from_u8(v: u8) -> Option<Self> {
        [Shape::None, Shape::Gem, Shape::Star].get(v as usize).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub kind: ObjectKind,
    pub color: Color,
    pub shape: Shape,
    pub cell: Cell,
}

impl ObjectSpec {
    pub fn plain(kind: ObjectKind, cell: Cell) -> Self {
        Self {
            kind,
            color: Color::None,
            shape: Shape::None,
            cell,
        }
    }

    pub fn composite(color: Color, shape: Shape, cell: Cell) -> Self {
        Self {
            kind: ObjectKind::Composite,
            color,
            shape,
            cell,
        }
    }

    pub fn is_yellow_star(&self) -> bool {
        self.kind == ObjectKind::Composite && self.color == Color::Yellow && self.shape == Shape::Star
    }

    pub fn is_red_gem(&self) -> bool {
        self.kind == ObjectKind::Composite && self.color == Color::Red && self.shape == Shape::Gem
    }

    pub fn is_yellow_gem(&self) -> bool {
        self.kind == ObjectKind::Composite && self.color == Color::Yellow && self.shape == Shape::Gem
    }
}

/// A generated world layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub family: Family,
    pub width: usize,
    pub height: usize,
    /// Row-major, `y = 0` is the top row.
    pub tiles: Vec<Tile>,
    pub objects: Vec<ObjectSpec>,
    pub spawn: Cell,
    /// The level's shift draw fired (CoinRun: the coin was placed randomly).
    pub randomized: bool,
}

impl LevelSpec {
    pub fn tile(&self, c: Cell) -> Tile {
        self.tiles[c.y * self.width + c.x]
    }

    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Out-of-bounds counts as solid.
    pub fn solid(&self, x: isize, y: isize) -> bool {
        !self.in_bounds(x, y) || self.tiles[y as usize * self.width + x as usize] == Tile::Wall
    }

    pub fn objects_of(&self, kind: ObjectKind) -> impl Iterator<Item = &ObjectSpec> {
        self.objects.iter().filter(move |o| o.kind == kind)
    }

    pub fn count(&self, kind: ObjectKind) -> usize {
        self.objects_of(kind).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum CheeseMode {
    FixedCorner = 0,
    Random = 1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum AmbiguityPhase {
    TrainYellowGem = 0,
    TestStarVsGem = 1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum KeyChestRatio {
    ChestsDouble = 0,
    KeysDouble = 1,
}

impl CheeseMode {
    pub fn from_u8(v: u8) -> Option<Self> {
        [CheeseMode::FixedCorner, CheeseMode::Random].get(v as usize).copied()
    }
    pub fn name(self) -> &'static str {
        match self {
            CheeseMode::FixedCorner => "fixed_corner",
            CheeseMode::Random => "random",
        }
    }
}

impl AmbiguityPhase {
    pub fn from_u8(v: u8) -> Option<Self> {
        [AmbiguityPhase::TrainYellowGem, AmbiguityPhase::TestStarVsGem].get(v as usize).copied()
    }
    pub fn name(self) -> &'static str {
        match self {
            AmbiguityPhase::TrainYellowGem => "train_yellow_gem",
            AmbiguityPhase::TestStarVsGem => "test_star_vs_gem",
        }
    }
}

impl KeyChestRatio {
    pub fn from_u8(v: u8) -> Option<Self> {
        [KeyChestRatio::ChestsDouble, KeyChestRatio::KeysDouble].get(v as usize).copied()
    }
    pub fn name(self) -> &'static str {
        match self {
            KeyChestRatio::ChestsDouble => "chests_double",
            KeyChestRatio::KeysDouble => "keys_double",
        }
    }
}

/// Train/test distribution knobs. Only the fields of `family` are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub family: Family,
    /// Percent of CoinRun levels whose coin is placed randomly.
    pub coin_random_pct: u8,
    pub cheese_mode: CheeseMode,
    pub ambiguity_phase: AmbiguityPhase,
    pub keychest_ratio: KeyChestRatio,
}

impl ShiftConfig {
    /// The training distribution of `family`.
    pub fn train(family: Family) -> Self {
        Self {
            family,
            coin_random_pct: 0,
            cheese_mode: CheeseMode::FixedCorner,
            ambiguity_phase: AmbiguityPhase::TrainYellowGem,
            keychest_ratio: KeyChestRatio::ChestsDouble,
        }
    }

    /// The shifted test distribution of `family`.
    pub fn test(family: Family) -> Self {
        Self {
            family,
            coin_random_pct: 100,
            cheese_mode: CheeseMode::Random,
            ambiguity_phase: AmbiguityPhase::TestStarVsGem,
            keychest_ratio: KeyChestRatio::KeysDouble,
        }
    }

    pub fn with_coin_pct(mut self, pct: u8) -> Self {
        self.coin_random_pct = pct;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.coin_random_pct > 100 {
            return Err(Error::Config(format!(
                "coin_random_pct {} outside [0, 100]",
                self.coin_random_pct
            )));
        }
        Ok(())
    }

    pub fn check_family(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(Error::FamilyMismatch {
                expected: family.name().into(),
                got: self.family.name().into(),
            });
        }
        self.validate()
    }

    /// Is this the shifted (test) side of the family's axis?
    pub fn is_test(&self) -> bool {
        match self.family {
            Family::CoinRun => self.coin_random_pct > 0,
            Family::Maze1 => self.cheese_mode == CheeseMode::Random,
            Family::Maze2 => self.ambiguity_phase == AmbiguityPhase::TestStarVsGem,
            Family::KeysChests => self.keychest_ratio == KeyChestRatio::KeysDouble,
        }
    }
}
