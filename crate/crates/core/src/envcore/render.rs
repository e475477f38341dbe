//! Human-facing renderings of a state, drawn from its observation planes.
//!
//! ASCII glyphs:
//!
//! | glyph | meaning             | glyph | meaning      |
//! |-------|---------------------|-------|--------------|
//! | `#`   | wall                | `$`   | coin         |
//! | `.`   | floor               | `c`   | cheese       |
//! | `^`   | hazard              | `k`   | key          |
//! | `@`   | agent               | `C`   | chest        |
//! | `!`   | agent on a hazard   | `G`   | yellow gem   |
//! | `*`   | yellow star         | `g`   | red gem      |
//! | `x`   | red star            |       |              |
//!
//! RGB: [`TILE_PX`]-pixel square per tile, colors from [`palette`]. Gems are
//! drawn as diamonds and stars as eight-armed asterisks in their object color.

use std::fmt::Write as _;

use crate::worlds::{Cell, Color, ObjectKind, ObjectSpec, Shape, Tile};
use crate::{Error, Result};

use super::env::EnvState;
use super::obs::{Observation, Plane};

pub const TILE_PX: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    Ascii,
    Rgb,
}

impl std::str::FromStr for RenderMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(RenderMode::Ascii),
            "rgb" => Ok(RenderMode::Rgb),
            _ => Err(Error::Config(format!("unknown render mode `{s}` (ascii|rgb)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rendered {
    Ascii(String),
    Rgb(RgbImage),
}

pub mod palette {
    pub type Rgb = [u8; 3];
    pub const WALL: Rgb = [96, 96, 96];
    pub const FLOOR: Rgb = [24, 24, 32];
    pub const HAZARD: Rgb = [208, 64, 0];
    pub const AGENT: Rgb = [64, 144, 255];
    pub const COIN: Rgb = [255, 168, 0];
    pub const CHEESE: Rgb = [255, 240, 160];
    pub const KEY: Rgb = [0, 200, 200];
    pub const CHEST: Rgb = [140, 80, 20];
    pub const YELLOW: Rgb = [255, 230, 0];
    pub const RED: Rgb = [220, 32, 32];
}

/// Packed RGB8 image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

/// Objects and agent recovered from an observation.
fn objects_from_obs(obs: &Observation) -> Vec<ObjectSpec> {
    let mut out = Vec::new();
    for y in 0..obs.height {
        for x in 0..obs.width {
            let c = Cell::new(x, y);
            for (plane, kind) in [
                (Plane::Coin, ObjectKind::Coin),
                (Plane::Cheese, ObjectKind::Cheese),
                (Plane::Key, ObjectKind::Key),
                (Plane::Chest, ObjectKind::Chest),
            ] {
                if obs.get(plane, c) {
                    out.push(ObjectSpec::plain(kind, c));
                }
            }
            let color = if obs.get(Plane::Yellow, c) {
                Color::Yellow
            } else if obs.get(Plane::Red, c) {
                Color::Red
            } else {
                Color::None
            };
            let shape = if obs.get(Plane::Gem, c) {
                Shape::Gem
            } else if obs.get(Plane::Star, c) {
                Shape::Star
            } else {
                Shape::None
            };
            if color != Color::None || shape != Shape::None {
                out.push(ObjectSpec::composite(color, shape, c));
            }
        }
    }
    out
}

fn tile_from_obs(obs: &Observation, c: Cell) -> Tile {
    if obs.get(Plane::Wall, c) {
        Tile::Wall
    } else if obs.get(Plane::Hazard, c) {
        Tile::Hazard
    } else {
        Tile::Floor
    }
}

fn object_glyph(o: &ObjectSpec) -> char {
    match (o.kind, o.color, o.shape) {
        (ObjectKind::Coin, ..) => '$',
        (ObjectKind::Cheese, ..) => 'c',
        (ObjectKind::Key, ..) => 'k',
        (ObjectKind::Chest, ..) => 'C',
        (_, Color::Red, Shape::Gem) => 'g',
        (_, Color::Red, _) => 'x',
        (_, _, Shape::Star) => '*',
        _ => 'G',
    }
}

pub fn ascii(obs: &Observation) -> String {
    let mut grid: Vec<Vec<char>> = (0..obs.height)
        .map(|y| {
            (0..obs.width)
                .map(|x| match tile_from_obs(obs, Cell::new(x, y)) {
                    Tile::Wall => '#',
                    Tile::Hazard => '^',
                    Tile::Floor => '.',
                })
                .collect()
        })
        .collect();
    for o in objects_from_obs(obs) {
        grid[o.cell.y][o.cell.x] = object_glyph(&o);
    }
    if let Some(a) = obs.agent_cell() {
        grid[a.y][a.x] = if tile_from_obs(obs, a) == Tile::Hazard { '!' } else { '@' };
    }
    let mut s = String::with_capacity(obs.height * (obs.width + 1));
    for row in grid {
        let _ = writeln!(s, "{}", row.into_iter().collect::<String>());
    }
    s
}

/// Grid recovered from an ASCII frame. Objects under the agent are not
/// recoverable and are absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedFrame {
    pub width: usize,
    pub height: usize,
    pub tiles: Vec<Tile>,
    pub agent: Option<Cell>,
    pub objects: Vec<ObjectSpec>,
}

pub fn parse_ascii(text: &str) -> Result<ParsedFrame> {
    let rows: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    let height = rows.len();
    let width = rows.first().map_or(0, |r| r.chars().count());
    if height == 0 || width == 0 {
        return Err(Error::Config("empty ascii frame".into()));
    }
    let mut tiles = Vec::with_capacity(width * height);
    let mut agent = None;
    let mut objects = Vec::new();
    for (y, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(Error::Config(format!("ascii row {y} has ragged width")));
        }
        for (x, ch) in row.chars().enumerate() {
            let c = Cell::new(x, y);
            let tile = match ch {
                '#' => Tile::Wall,
                '^' | '!' => Tile::Hazard,
                _ => Tile::Floor,
            };
            tiles.push(tile);
            let obj = match ch {
                '$' => Some(ObjectSpec::plain(ObjectKind::Coin, c)),
                'c' => Some(ObjectSpec::plain(ObjectKind::Cheese, c)),
                'k' => Some(ObjectSpec::plain(ObjectKind::Key, c)),
                'C' => Some(ObjectSpec::plain(ObjectKind::Chest, c)),
                'G' => Some(ObjectSpec::composite(Color::Yellow, Shape::Gem, c)),
                '*' => Some(ObjectSpec::composite(Color::Yellow, Shape::Star, c)),
                'g' => Some(ObjectSpec::composite(Color::Red, Shape::Gem, c)),
                'x' => Some(ObjectSpec::composite(Color::Red, Shape::Star, c)),
                '@' | '!' | '#' | '^' | '.' => None,
                other => return Err(Error::Config(format!("unknown glyph `{other}` at ({x},{y})"))),
            };
            if let Some(o) = obj {
                objects.push(o);
            }
            if ch == '@' || ch == '!' {
                if agent.is_some() {
                    return Err(Error::Config("more than one agent glyph".into()));
                }
                agent = Some(c);
            }
        }
    }
    Ok(ParsedFrame {
        width,
        height,
        tiles,
        agent,
        objects,
    })
}

fn gem_mask(x: usize, y: usize) -> bool {
    let (dx, dy) = ((2 * x as i32 - 7).abs(), (2 * y as i32 - 7).abs());
    dx + dy <= 7
}

fn star_mask(x: usize, y: usize) -> bool {
    let inner = (1..7).contains(&x) && (1..7).contains(&y);
    inner && (x == 3 || x == 4 || y == 3 || y == 4 || x == y || x + y == 7)
}

fn blob_mask(x: usize, y: usize) -> bool {
    (2..6).contains(&x) && (2..6).contains(&y)
}

pub fn rgb(obs: &Observation) -> RgbImage {
    let mut img = RgbImage::new(obs.width * TILE_PX, obs.height * TILE_PX);
    let paint = |img: &mut RgbImage, c: Cell, color: [u8; 3], mask: &dyn Fn(usize, usize) -> bool| {
        for py in 0..TILE_PX {
            for px in 0..TILE_PX {
                if mask(px, py) {
                    img.put(c.x * TILE_PX + px, c.y * TILE_PX + py, color);
                }
            }
        }
    };
    for y in 0..obs.height {
        for x in 0..obs.width {
            let c = Cell::new(x, y);
            let base = match tile_from_obs(obs, c) {
                Tile::Wall => palette::WALL,
                Tile::Hazard => palette::HAZARD,
                Tile::Floor => palette::FLOOR,
            };
            paint(&mut img, c, base, &|_, _| true);
        }
    }
    for o in objects_from_obs(obs) {
        let color = match (o.kind, o.color) {
            (ObjectKind::Coin, _) => palette::COIN,
            (ObjectKind::Cheese, _) => palette::CHEESE,
            (ObjectKind::Key, _) => palette::KEY,
            (ObjectKind::Chest, _) => palette::CHEST,
            (_, Color::Red) => palette::RED,
            _ => palette::YELLOW,
        };
        match o.shape {
            Shape::Gem => paint(&mut img, o.cell, color, &gem_mask),
            Shape::Star => paint(&mut img, o.cell, color, &star_mask),
            Shape::None => paint(&mut img, o.cell, color, &blob_mask),
        }
    }
    if let Some(a) = obs.agent_cell() {
        paint(&mut img, a, palette::AGENT, &gem_mask);
    }
    img
}

pub fn render(env: &EnvState, mode: RenderMode) -> Rendered {
    render_obs(&env.observe(), mode)
}

pub fn render_obs(obs: &Observation, mode: RenderMode) -> Rendered {
    match mode {
        RenderMode::Ascii => Rendered::Ascii(ascii(obs)),
        RenderMode::Rgb => Rendered::Rgb(rgb(obs)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worlds::{Family, LevelSpec, ShiftConfig};

    fn room(objects: Vec<ObjectSpec>, agent: Cell) -> Observation {
        let level = LevelSpec {
            family: Family::Maze2,
            width: 3,
            height: 3,
            tiles: vec![Tile::Floor; 9],
            objects: objects.clone(),
            spawn: agent,
            randomized: false,
        };
        Observation::encode(&level, agent, &objects, 0)
    }

    #[test]
    fn empty_room_centered_agent() {
        let s = ascii(&room(vec![], Cell::new(1, 1)));
        assert_eq!(s, "...\n.@.\n...\n");
    }

    #[test]
    fn generated_levels_parse_back() {
        for f in Family::ALL {
            for seed in 0..5 {
                let (env, obs) = crate::envcore::reset(f, seed, &ShiftConfig::test(f)).unwrap();
                let p = parse_ascii(&ascii(&obs)).unwrap();
                assert_eq!(p.tiles, env.level().tiles);
                assert_eq!(p.agent, Some(env.agent()));
                let mut want: Vec<_> = env.live_objects().iter().filter(|o| o.cell != env.agent()).copied().collect();
                want.sort_by_key(|o| (o.cell.y, o.cell.x));
                assert_eq!(p.objects, want);
            }
        }
    }

    #[test]
    fn yellow_star_pixels() {
        let star = Cell::new(2, 0);
        let img = rgb(&room(vec![ObjectSpec::composite(Color::Yellow, Shape::Star, star)], Cell::new(0, 2)));
        assert_eq!((img.width, img.height), (24, 24));
        for py in 0..TILE_PX {
            for px in 0..TILE_PX {
                let want = if star_mask(px, py) { palette::YELLOW } else { palette::FLOOR };
                assert_eq!(img.pixel(star.x * TILE_PX + px, py), want, "({px},{py})");
            }
        }
        assert!(img.to_ppm().starts_with(b"P6\n24 24\n255\n"));
    }
}
