//! Agent-environment contract: reset/step, observation encoding, batched
//! stepping with auto-reset, episode transcripts and rendering.

pub mod env;
pub mod obs;
pub mod render;
pub mod transcript;

pub use env::{batch_step, reset, EnvState, EventTag, StepResult, Tags, GOAL_REWARD};
pub use obs::{Observation, Plane, INVENTORY_LEN, KEY_NORM, NUM_PLANES};
pub use render::{parse_ascii, render, render_obs, RenderMode, Rendered, RgbImage};
pub use transcript::{replay_actions, EpisodeTranscript, TranscriptStep};
