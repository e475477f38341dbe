use serde::{Deserialize, Serialize};

use crate::numkit::{Scalar, Tensor};
use crate::worlds::{Cell, Color, LevelSpec, ObjectKind, ObjectSpec, Shape, Tile};

/// Observation planes, in channel order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(usize)]
pub enum Plane {
    Wall = 0,
    Floor = 1,
    Agent = 2,
    Hazard = 3,
    Coin = 4,
    Cheese = 5,
    Key = 6,
    Chest = 7,
    Yellow = 8,
    Red = 9,
    Gem = 10,
    Star = 11,
}

pub const NUM_PLANES: usize = 12;
/// Inventory scalars: held keys / [`KEY_NORM`].
pub const INVENTORY_LEN: usize = 1;
pub const KEY_NORM: f32 = 6.0;

/// Binary occupancy planes `[C,H,W]` plus inventory scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub height: usize,
    pub width: usize,
    pub planes: Vec<u8>,
    pub inventory: Vec<f32>,
}

impl Observation {
    pub fn encode(level: &LevelSpec, agent: Cell, live_objects: &[ObjectSpec], keys_held: u32) -> Self {
        let (w, h) = (level.width, level.height);
        let cells = w * h;
        let mut planes = vec![0u8; NUM_PLANES * cells];
        let mut set = |p: Plane, c: Cell| planes[p as usize * cells + c.y * w + c.x] = 1;
        for y in 0..h {
            for x in 0..w {
                let c = Cell::new(x, y);
                match level.tile(c) {
                    Tile::Wall => set(Plane::Wall, c),
                    Tile::Floor => set(Plane::Floor, c),
                    Tile::Hazard => set(Plane::Hazard, c),
                }
            }
        }
        for o in live_objects {
            match o.kind {
                ObjectKind::Coin => set(Plane::Coin, o.cell),
                ObjectKind::Cheese => set(Plane::Cheese, o.cell),
                ObjectKind::Key => set(Plane::Key, o.cell),
                ObjectKind::Chest => set(Plane::Chest, o.cell),
                ObjectKind::Composite => {}
            }
            match o.color {
                Color::Yellow => set(Plane::Yellow, o.cell),
                Color::Red => set(Plane::Red, o.cell),
                Color::None => {}
            }
            match o.shape {
                Shape::Gem => set(Plane::Gem, o.cell),
                Shape::Star => set(Plane::Star, o.cell),
                Shape::None => {}
            }
        }
        set(Plane::Agent, agent);
        Self {
            height: h,
            width: w,
            planes,
            inventory: vec![keys_held as f32 / KEY_NORM],
        }
    }

    pub fn plane(&self, p: Plane) -> &[u8] {
        let cells = self.width * self.height;
        &self.planes[p as usize * cells..(p as usize + 1) * cells]
    }

    pub fn get(&self, p: Plane, c: Cell) -> bool {
        self.plane(p)[c.y * self.width + c.x] != 0
    }

    pub fn agent_cell(&self) -> Option<Cell> {
        let i = self.plane(Plane::Agent).iter().position(|&v| v != 0)?;
        Some(Cell::new(i % self.width, i / self.width))
    }

    pub fn keys_held(&self) -> u32 {
        (self.inventory[0] * KEY_NORM).round() as u32
    }

    /// Type invariants: binary planes, exactly one agent cell.
    pub fn is_well_formed(&self) -> bool {
        self.planes.len() == NUM_PLANES * self.width * self.height
            && self.planes.iter().all(|&v| v <= 1)
            && self.plane(Plane::Agent).iter().filter(|&&v| v == 1).count() == 1
            && self.inventory.len() == INVENTORY_LEN
    }

    /// Planes translated so the agent lands on `anchor`, same size as the
    /// grid. Cells that fall outside the level read as wall.
    pub fn agent_view(&self, anchor: Cell) -> Vec<u8> {
        let (w, h) = (self.width, self.height);
        let agent = self.agent_cell().unwrap_or(anchor);
        let dx = agent.x as isize - anchor.x as isize;
        let dy = agent.y as isize - anchor.y as isize;
        let mut out = vec![0u8; self.planes.len()];
        for p in 0..NUM_PLANES {
            let src = &self.planes[p * w * h..(p + 1) * w * h];
            let dst = &mut out[p * w * h..(p + 1) * w * h];
            for y in 0..h {
                let sy = y as isize + dy;
                for x in 0..w {
                    let sx = x as isize + dx;
                    dst[y * w + x] = if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                        (p == Plane::Wall as usize) as u8
                    } else {
                        src[sy as usize * w + sx as usize]
                    };
                }
            }
        }
        out
    }

    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::from_vec(
            &[NUM_PLANES, self.height, self.width],
            self.planes.iter().map(|&v| T::from_f64(v as f64)).collect(),
        )
        .expect("observation shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worlds::{Family, ShiftConfig};

    #[test]
    fn composite_sets_one_color_and_one_shape_bit() {
        let level = crate::worlds::generate(Family::Maze2, 5, &ShiftConfig::test(Family::Maze2)).unwrap();
        let obs = Observation::encode(&level, level.spawn, &level.objects, 0);
        assert!(obs.is_well_formed());
        let star = level.objects[0].cell;
        assert!(obs.get(Plane::Yellow, star) && obs.get(Plane::Star, star));
        assert!(!obs.get(Plane::Red, star) && !obs.get(Plane::Gem, star));
        let gem = level.objects[1].cell;
        assert!(obs.get(Plane::Red, gem) && obs.get(Plane::Gem, gem));
        assert_eq!(obs.agent_cell(), Some(level.spawn));
    }

    #[test]
    fn agent_view_pins_the_agent() {
        let level = crate::worlds::generate(Family::CoinRun, 3, &ShiftConfig::train(Family::CoinRun)).unwrap();
        let obs = Observation::encode(&level, level.spawn, &level.objects, 0);
        let anchor = Cell::new(3, 5);
        let view = Observation {
            planes: obs.agent_view(anchor),
            ..obs.clone()
        };
        assert!(view.is_well_formed());
        assert_eq!(view.agent_cell(), Some(anchor));
        let (dx, dy) = (level.spawn.x as isize - 3, level.spawn.y as isize - 5);
        for y in 0..obs.height {
            for x in 0..obs.width {
                let (sx, sy) = (x as isize + dx, y as isize + dy);
                let inside = sx >= 0 && sy >= 0 && sx < obs.width as isize && sy < obs.height as isize;
                for p in [Plane::Wall, Plane::Hazard, Plane::Coin] {
                    let want = if inside {
                        obs.get(p, Cell::new(sx as usize, sy as usize))
                    } else {
                        p == Plane::Wall
                    };
                    assert_eq!(view.get(p, Cell::new(x, y)), want);
                }
            }
        }
        assert_eq!(obs.agent_view(level.spawn), obs.planes);
    }
}
