//! Procedural generators, movement rules and reachability for the four
//! experiment families, each with a training and a shifted test mode.

pub mod gen;
pub mod level;
pub mod maze;
pub mod physics;

pub use gen::{generate, is_solvable};
pub use level::{
    AmbiguityPhase, Cell, CheeseMode, Color, Family, KeyChestRatio, LevelSpec, ObjectKind, ObjectSpec, Shape,
    ShiftConfig, Tile,
};
pub use maze::{kruskal_maze, MazeGrid};
pub use physics::{path_exists, reachable_cells};
