//! Level generators for the four families.
//!
//! Every generator is a pure function of its RNG state and the shift
//! config. A draw that fails its solvability check is discarded and
//! regenerated from the next sub-seed, so callers never see one.

use crate::numkit::RngStream;
use crate::{Error, Result};

use super::level::*;
use super::maze::{cell_to_tile, kruskal_maze};
use super::physics::{path_exists, reachable_cells};

const MAX_ATTEMPTS: u64 = 1000;

/// Level for `(family, seed, shift)`; sub-seed `k` uses stream `k`.
pub fn generate(family: Family, seed: u64, shift: &ShiftConfig) -> Result<LevelSpec> {
    shift.check_family(family)?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = RngStream::new(seed, attempt);
        let level = match family {
            Family::CoinRun => gen_coinrun(&mut rng, shift),
            Family::Maze1 => gen_maze1(&mut rng, shift),
            Family::Maze2 => gen_maze2(&mut rng, shift),
            Family::KeysChests => gen_keyschests(&mut rng, shift),
        };
        if let Some(level) = level {
            return Ok(level);
        }
    }
    Err(Error::Env(format!(
        "no solvable {family} level after {MAX_ATTEMPTS} attempts for seed {seed}"
    )))
}

/// Every reward object reachable from the spawn.
pub fn is_solvable(level: &LevelSpec) -> bool {
    let reach = reachable_cells(level, level.spawn);
    !level.objects.is_empty() && level.objects.iter().all(|o| reach.contains(&o.cell))
}

// --------------------------------------------------------------------------
// CoinRun

const START_COLS: usize = 3;
const GOAL_COLS: usize = 3;
const MAX_GROUND: usize = 5;

#[derive(Clone, Copy)]
enum Segment {
    Flat,
    Step,
    Gap,
    Spike,
}

/// Terrain draw table; one draw in six is a hazard.
const SEGMENTS: [Segment; 12] = {
    use Segment::*;
    [Flat, Step, Step, Gap, Spike, Step, Flat, Step, Flat, Step, Flat, Step]
};

/// Side-scrolling platformer: ground columns of varying height, lava gaps,
/// spikes, agent at the far left, coin in the rightmost column unless the
/// level's Bernoulli(p) draw randomizes it over all reachable cells.
/// Returns `None` when the draw is unsolvable.
pub fn gen_coinrun(rng: &mut RngStream, shift: &ShiftConfig) -> Option<LevelSpec> {
    let (w, h) = (PLATFORMER_WIDTH, PLATFORMER_HEIGHT);
    let randomized = rng.percent(shift.coin_random_pct as u32);
    // ground[x] = solid tiles from the bottom; 0 means a lava gap
    let mut ground = vec![0usize; w];
    let mut spikes = vec![false; w];
    let mut cur = 1 + rng.index(3);
    ground[..START_COLS].iter_mut().for_each(|g| *g = cur);
    let mut x = START_COLS;
    let end = w - GOAL_COLS;
    while x < end {
        match SEGMENTS[rng.index(SEGMENTS.len())] {
            Segment::Flat => {
                let len = 1 + rng.index(2);
                for _ in 0..len.min(end - x) {
                    ground[x] = cur;
                    x += 1;
                }
            }
            Segment::Step => {
                // up or down by 1–2
                let delta = [-2isize, -1, 1, 2][rng.index(4)];
                cur = (cur as isize + delta).clamp(1, MAX_GROUND as isize) as usize;
                let len = 1 + rng.index(2);
                for _ in 0..len.min(end - x) {
                    ground[x] = cur;
                    x += 1;
                }
            }
            Segment::Gap => {
                // needs a landing column before the goal zone
                let width = 1 + rng.index(2);
                if x + width < end {
                    for _ in 0..width {
                        ground[x] = 0;
                        x += 1;
                    }
                    if rng.index(2) == 0 {
                        cur = (cur as isize + [-1isize, 1][rng.index(2)]).clamp(1, MAX_GROUND as isize) as usize;
                    }
                    ground[x] = cur;
                    x += 1;
                } else {
                    ground[x] = cur;
                    x += 1;
                }
            }
            Segment::Spike => {
                if x + 1 < end {
                    ground[x] = cur;
                    spikes[x] = true;
                    x += 1;
                    ground[x] = cur;
                    x += 1;
                } else {
                    ground[x] = cur;
                    x += 1;
                }
            }
        }
    }
    ground[end..].iter_mut().for_each(|g| *g = cur);

    let mut tiles = vec![Tile::Floor; w * h];
    for (x, &g) in ground.iter().enumerate() {
        if g == 0 {
            tiles[(h - 1) * w + x] = Tile::Hazard;
        } else {
            for y in (h - g)..h {
                tiles[y * w + x] = Tile::Wall;
            }
            if spikes[x] {
                tiles[(h - 1 - g) * w + x] = Tile::Hazard;
            }
        }
    }
    let spawn = Cell::new(0, h - 1 - ground[0]);
    let goal = Cell::new(w - 1, h - 1 - ground[w - 1]);
    let mut level = LevelSpec {
        family: Family::CoinRun,
        width: w,
        height: h,
        tiles,
        objects: vec![],
        spawn,
        randomized,
    };
    if !path_exists(&level, spawn, goal) {
        return None;
    }
    let coin = if randomized {
        let cells: Vec<Cell> = reachable_cells(&level, spawn).into_iter().filter(|&c| c != spawn).collect();
        cells[rng.index(cells.len())]
    } else {
        goal
    };
    level.objects.push(ObjectSpec::plain(ObjectKind::Coin, coin));
    Some(level)
}

// --------------------------------------------------------------------------
// Mazes

fn maze_base(rng: &mut RngStream, family: Family, cells: usize) -> LevelSpec {
    let grid = kruskal_maze(rng, cells, cells);
    let (width, height, tiles) = grid.to_tiles();
    LevelSpec {
        family,
        width,
        height,
        tiles,
        objects: vec![],
        spawn: Cell::new(0, 0),
        randomized: false,
    }
}

/// `n` distinct lattice cells (as tiles) drawn uniformly, avoiding `exclude`.
fn distinct_cells(rng: &mut RngStream, cells: usize, n: usize, exclude: &[Cell]) -> Vec<Cell> {
    let mut pool: Vec<Cell> = (0..cells)
        .flat_map(|y| (0..cells).map(move |x| cell_to_tile(Cell::new(x, y))))
        .filter(|c| !exclude.contains(c))
        .collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.index(pool.len());
        out.push(pool.swap_remove(i));
    }
    out
}

/// Upper-right lattice cell, where Maze1 training cheese lives.
pub fn maze1_corner(cells: usize) -> Cell {
    cell_to_tile(Cell::new(cells - 1, 0))
}

pub fn gen_maze1(rng: &mut RngStream, shift: &ShiftConfig) -> Option<LevelSpec> {
    gen_maze1_sized(rng, shift, MAZE_CELLS)
}

pub fn gen_maze1_sized(rng: &mut RngStream, shift: &ShiftConfig, cells: usize) -> Option<LevelSpec> {
    let mut level = maze_base(rng, Family::Maze1, cells);
    let corner = maze1_corner(cells);
    let (spawn, cheese) = match shift.cheese_mode {
        CheeseMode::FixedCorner => (distinct_cells(rng, cells, 1, &[corner])[0], corner),
        CheeseMode::Random => {
            let spawn = distinct_cells(rng, cells, 1, &[])[0];
            (spawn, distinct_cells(rng, cells, 1, &[spawn])[0])
        }
    };
    level.spawn = spawn;
    level.randomized = shift.cheese_mode == CheeseMode::Random;
    level.objects.push(ObjectSpec::plain(ObjectKind::Cheese, cheese));
    is_solvable(&level).then_some(level)
}

pub fn gen_maze2(rng: &mut RngStream, shift: &ShiftConfig) -> Option<LevelSpec> {
    gen_maze2_sized(rng, shift, MAZE_CELLS)
}

pub fn gen_maze2_sized(rng: &mut RngStream, shift: &ShiftConfig, cells: usize) -> Option<LevelSpec> {
    let mut level = maze_base(rng, Family::Maze2, cells);
    let spawn = distinct_cells(rng, cells, 1, &[])[0];
    level.spawn = spawn;
    match shift.ambiguity_phase {
        AmbiguityPhase::TrainYellowGem => {
            let c = distinct_cells(rng, cells, 1, &[spawn]);
            level.objects.push(ObjectSpec::composite(Color::Yellow, Shape::Gem, c[0]));
        }
        AmbiguityPhase::TestStarVsGem => {
            let c = distinct_cells(rng, cells, 2, &[spawn]);
            level.objects.push(ObjectSpec::composite(Color::Yellow, Shape::Star, c[0]));
            level.objects.push(ObjectSpec::composite(Color::Red, Shape::Gem, c[1]));
            level.randomized = true;
        }
    }
    is_solvable(&level).then_some(level)
}

pub fn gen_keyschests(rng: &mut RngStream, shift: &ShiftConfig) -> Option<LevelSpec> {
    gen_keyschests_sized(rng, shift, MAZE_CELLS)
}

/// `k ∈ {1,2,3}`; chests_double → k keys, 2k chests; keys_double → 2k keys, k chests.
pub fn gen_keyschests_sized(rng: &mut RngStream, shift: &ShiftConfig, cells: usize) -> Option<LevelSpec> {
    let mut level = maze_base(rng, Family::KeysChests, cells);
    let k = 1 + rng.index(3);
    let (keys, chests) = match shift.keychest_ratio {
        KeyChestRatio::ChestsDouble => (k, 2 * k),
        KeyChestRatio::KeysDouble => (2 * k, k),
    };
    if keys + chests + 1 > cells * cells {
        return None;
    }
    let spawn = distinct_cells(rng, cells, 1, &[])[0];
    level.spawn = spawn;
    level.randomized = shift.keychest_ratio == KeyChestRatio::KeysDouble;
    let spots = distinct_cells(rng, cells, keys + chests, &[spawn]);
    for (i, c) in spots.into_iter().enumerate() {
        let kind = if i < keys { ObjectKind::Key } else { ObjectKind::Chest };
        level.objects.push(ObjectSpec::plain(kind, c));
    }
    is_solvable(&level).then_some(level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        for family in Family::ALL {
            for shift in [ShiftConfig::train(family), ShiftConfig::test(family)] {
                let a = generate(family, 99, &shift).unwrap();
                let b = generate(family, 99, &shift).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn family_mismatch_is_an_error() {
        let shift = ShiftConfig::train(Family::Maze1);
        assert!(matches!(generate(Family::CoinRun, 1, &shift), Err(Error::FamilyMismatch { .. })));
    }

    #[test]
    fn coinrun_train_coin_in_goal_column() {
        for seed in 0..200 {
            let l = generate(Family::CoinRun, seed, &ShiftConfig::train(Family::CoinRun)).unwrap();
            let coin = l.objects[0].cell;
            assert_eq!(coin.x, l.width - 1);
            assert_eq!(l.tile(Cell::new(coin.x, coin.y + 1)), Tile::Wall);
            assert!(!l.randomized);
            assert_eq!(l.spawn.x, 0);
        }
    }

    #[test]
    fn maze1_fixed_corner_and_spawn_rules() {
        let corner = maze1_corner(MAZE_CELLS);
        for seed in 0..200 {
            let l = generate(Family::Maze1, seed, &ShiftConfig::train(Family::Maze1)).unwrap();
            assert_eq!(l.objects[0].cell, corner);
            assert_ne!(l.spawn, corner);
            let t = generate(Family::Maze1, seed, &ShiftConfig::test(Family::Maze1)).unwrap();
            assert_ne!(t.spawn, t.objects[0].cell);
        }
    }

    #[test]
    fn maze2_phases() {
        for seed in 0..100 {
            let tr = generate(Family::Maze2, seed, &ShiftConfig::train(Family::Maze2)).unwrap();
            assert_eq!(tr.objects.len(), 1);
            assert!(tr.objects[0].is_yellow_gem());
            let te = generate(Family::Maze2, seed, &ShiftConfig::test(Family::Maze2)).unwrap();
            assert_eq!(te.objects.len(), 2);
            assert!(te.objects[0].is_yellow_star());
            assert!(te.objects[1].is_red_gem());
            assert_ne!(te.objects[0].cell, te.objects[1].cell);
        }
    }

    #[test]
    fn keyschests_ratios() {
        for seed in 0..100 {
            let tr = generate(Family::KeysChests, seed, &ShiftConfig::train(Family::KeysChests)).unwrap();
            let (k, c) = (tr.count(ObjectKind::Key), tr.count(ObjectKind::Chest));
            assert_eq!(c, 2 * k);
            assert!((1..=3).contains(&k));
            let te = generate(Family::KeysChests, seed, &ShiftConfig::test(Family::KeysChests)).unwrap();
            let (k, c) = (te.count(ObjectKind::Key), te.count(ObjectKind::Chest));
            assert_eq!(k, 2 * c);
        }
    }
}
