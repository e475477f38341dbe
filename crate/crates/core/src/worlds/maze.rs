//! Perfect mazes via randomized Kruskal over a cell lattice.

use crate::numkit::RngStream;

use super::level::{Cell, Tile};

/// Union-find with path compression and union by rank.
#[derive(Clone, Debug)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merge the sets of `a` and `b`; false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Passage structure between lattice cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MazeGrid {
    pub width: usize,
    pub height: usize,
    /// `east[y*w + x]`: passage between (x,y) and (x+1,y)
    east: Vec<bool>,
    /// `south[y*w + x]`: passage between (x,y) and (x,y+1)
    south: Vec<bool>,
}

impl MazeGrid {
    pub fn closed(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            east: vec![false; width * height],
            south: vec![false; width * height],
        }
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// Open the passage between two orthogonally adjacent cells.
    pub fn open(&mut self, a: Cell, b: Cell) {
        let (lo, hi) = if (a.y, a.x) < (b.y, b.x) { (a, b) } else { (b, a) };
        if lo.y == hi.y && lo.x + 1 == hi.x {
            self.east[lo.y * self.width + lo.x] = true;
        } else if lo.x == hi.x && lo.y + 1 == hi.y {
            self.south[lo.y * self.width + lo.x] = true;
        } else {
            panic!("cells {a:?} and {b:?} are not adjacent");
        }
    }

    pub fn is_open(&self, a: Cell, b: Cell) -> bool {
        let (lo, hi) = if (a.y, a.x) < (b.y, b.x) { (a, b) } else { (b, a) };
        if lo.y == hi.y && lo.x + 1 == hi.x {
            self.east[lo.y * self.width + lo.x]
        } else if lo.x == hi.x && lo.y + 1 == hi.y {
            self.south[lo.y * self.width + lo.x]
        } else {
            false
        }
    }

    pub fn passages(&self) -> Vec<(Cell, Cell)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.east[y * self.width + x] {
                    out.push((Cell::new(x, y), Cell::new(x + 1, y)));
                }
                if self.south[y * self.width + x] {
                    out.push((Cell::new(x, y), Cell::new(x, y + 1)));
                }
            }
        }
        out
    }

    pub fn passage_count(&self) -> usize {
        self.east.iter().chain(&self.south).filter(|&&b| b).count()
    }

    pub fn neighbors(&self, c: Cell) -> Vec<Cell> {
        let mut out = Vec::with_capacity(4);
        if c.x > 0 && self.is_open(c, Cell::new(c.x - 1, c.y)) {
            out.push(Cell::new(c.x - 1, c.y));
        }
        if c.x + 1 < self.width && self.is_open(c, Cell::new(c.x + 1, c.y)) {
            out.push(Cell::new(c.x + 1, c.y));
        }
        if c.y > 0 && self.is_open(c, Cell::new(c.x, c.y - 1)) {
            out.push(Cell::new(c.x, c.y - 1));
        }
        if c.y + 1 < self.height && self.is_open(c, Cell::new(c.x, c.y + 1)) {
            out.push(Cell::new(c.x, c.y + 1));
        }
        out
    }

    /// Tile lattice of size `(2w−1) × (2h−1)`: cell (x,y) sits on tile
    /// (2x, 2y); odd tiles between cells are floor iff the passage is open.
    pub fn to_tiles(&self) -> (usize, usize, Vec<Tile>) {
        let tw = 2 * self.width - 1;
        let th = 2 * self.height - 1;
        let mut tiles = vec![Tile::Wall; tw * th];
        for y in 0..self.height {
            for x in 0..self.width {
                tiles[2 * y * tw + 2 * x] = Tile::Floor;
            }
        }
        for (a, b) in self.passages() {
            tiles[(a.y + b.y) * tw + (a.x + b.x)] = Tile::Floor;
        }
        (tw, th, tiles)
    }
}

/// Tile position of a lattice cell.
pub fn cell_to_tile(c: Cell) -> Cell {
    Cell::new(2 * c.x, 2 * c.y)
}

/// Randomized Kruskal: shuffle all interior walls, knock each down when it
/// separates two different components.
pub fn kruskal_maze(rng: &mut RngStream, width: usize, height: usize) -> MazeGrid {
    assert!(width >= 1 && height >= 1, "maze must have at least one cell");
    let mut edges = Vec::with_capacity(2 * width * height);
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((Cell::new(x, y), Cell::new(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((Cell::new(x, y), Cell::new(x, y + 1)));
            }
        }
    }
    rng.shuffle(&mut edges);
    let mut sets = DisjointSet::new(width * height);
    let mut grid = MazeGrid::closed(width, height);
    for (a, b) in edges {
        if sets.union(a.y * width + a.x, b.y * width + b.x) {
            grid.open(a, b);
        }
    }
    grid
}
