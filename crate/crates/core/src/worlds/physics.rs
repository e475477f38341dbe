//! Movement rules shared by the environments and the reachability checks.
//!
//! Mazes: one tile per tick in the chosen direction; walls and the grid edge
//! block. Platformer: each tick applies the vertical phase first (a jump
//! lifts the agent one tile per tick for [`JUMP_HEIGHT`] ticks, otherwise
//! gravity drops it one tile when unsupported), then the horizontal move.
//! With this ordering a jump clears gaps and spikes up to two tiles wide and
//! climbs ledges up to two tiles high.

use std::collections::VecDeque;

use super::level::{Cell, Family, LevelSpec, Tile};

pub const JUMP_HEIGHT: u8 = 2;

pub mod maze_action {
    pub const UP: usize = 0;
    pub const DOWN: usize = 1;
    pub const LEFT: usize = 2;
    pub const RIGHT: usize = 3;
    pub const NOOP: usize = 4;
}

pub mod platform_action {
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;
    pub const JUMP: usize = 2;
    pub const NOOP: usize = 3;
}

/// Maze move with wall blocking.
pub fn maze_move(level: &LevelSpec, pos: Cell, action: usize) -> Cell {
    let (dx, dy): (isize, isize) = match action {
        maze_action::UP => (0, -1),
        maze_action::DOWN => (0, 1),
        maze_action::LEFT => (-1, 0),
        maze_action::RIGHT => (1, 0),
        _ => (0, 0),
    };
    let nx = pos.x as isize + dx;
    let ny = pos.y as isize + dy;
    if level.solid(nx, ny) {
        pos
    } else {
        Cell::new(nx as usize, ny as usize)
    }
}

/// Agent kinematic state in the platformer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Body {
    pub pos: Cell,
    /// Remaining upward ticks of the current jump.
    pub rise: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tick {
    pub body: Body,
    /// Cells entered during the tick, in order (vertical, then horizontal).
    pub entered: [Option<Cell>; 2],
    pub died: bool,
}

pub fn grounded(level: &LevelSpec, pos: Cell) -> bool {
    level.solid(pos.x as isize, pos.y as isize + 1)
}

pub fn platform_tick(level: &LevelSpec, body: Body, action: usize) -> Tick {
    let mut b = body;
    let mut entered = [None, None];
    if action == platform_action::JUMP && b.rise == 0 && grounded(level, b.pos) {
        b.rise = JUMP_HEIGHT;
    }
    if b.rise > 0 {
        if level.solid(b.pos.x as isize, b.pos.y as isize - 1) {
            b.rise = 0;
        } else {
            b.pos.y -= 1;
            b.rise -= 1;
            entered[0] = Some(b.pos);
        }
    } else if !grounded(level, b.pos) {
        b.pos.y += 1;
        entered[0] = Some(b.pos);
    }
    if level.tile(b.pos) == Tile::Hazard {
        return Tick {
            body: b,
            entered,
            died: true,
        };
    }
    let dx: isize = match action {
        platform_action::LEFT => -1,
        platform_action::RIGHT => 1,
        _ => 0,
    };
    if dx != 0 {
        let nx = b.pos.x as isize + dx;
        if !level.solid(nx, b.pos.y as isize) {
            b.pos.x = nx as usize;
            entered[1] = Some(b.pos);
        }
    }
    let died = level.tile(b.pos) == Tile::Hazard;
    Tick { body: b, entered, died }
}

/// Standing on the ground in the rightmost column ends a platformer episode.
pub fn at_level_end(level: &LevelSpec, pos: Cell) -> bool {
    pos.x + 1 == level.width && grounded(level, pos)
}

/// Every cell the agent can occupy starting from `from`, honoring death
/// and the level-end terminal. `from` itself is included.
pub fn reachable_cells(level: &LevelSpec, from: Cell) -> Vec<Cell> {
    let mut seen_cells = vec![false; level.width * level.height];
    let mark = |c: Cell, seen: &mut Vec<bool>| seen[c.y * level.width + c.x] = true;
    mark(from, &mut seen_cells);
    if level.family.is_platformer() {
        let n_states = level.width * level.height * (JUMP_HEIGHT as usize + 1);
        let key = |b: &Body| (b.pos.y * level.width + b.pos.x) * (JUMP_HEIGHT as usize + 1) + b.rise as usize;
        let mut seen = vec![false; n_states];
        let start = Body { pos: from, rise: 0 };
        seen[key(&start)] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(b) = queue.pop_front() {
            if at_level_end(level, b.pos) {
                continue;
            }
            for action in 0..Family::CoinRun.num_actions() {
                let t = platform_tick(level, b, action);
                if t.died {
                    // cells passed before the fatal one still count
                    if let Some(c) = t.entered[0] {
                        if level.tile(c) != Tile::Hazard {
                            mark(c, &mut seen_cells);
                        }
                    }
                    continue;
                }
                for c in t.entered.iter().flatten() {
                    mark(*c, &mut seen_cells);
                }
                let k = key(&t.body);
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back(t.body);
                }
            }
        }
    } else {
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            for a in 0..4 {
                let n = maze_move(level, c, a);
                if !seen_cells[n.y * level.width + n.x] {
                    mark(n, &mut seen_cells);
                    queue.push_back(n);
                }
            }
        }
    }
    (0..level.height)
        .flat_map(|y| (0..level.width).map(move |x| Cell::new(x, y)))
        .filter(|c| seen_cells[c.y * level.width + c.x])
        .collect()
}

/// Can the agent get from `from` to `to` under the family's movement rules?
pub fn path_exists(level: &LevelSpec, from: Cell, to: Cell) -> bool {
    assert!(from.x < level.width && from.y < level.height && to.x < level.width && to.y < level.height);
    if level.tile(to) == Tile::Wall {
        return false;
    }
    reachable_cells(level, from).contains(&to)
}
