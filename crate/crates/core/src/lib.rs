//! Sidewalk navigation simulator: a pose graph of panoramic viewpoints with
//! ground-truth scene-text labels, episodic tasks, reward shaping, an optimal
//! oracle and a procedural world generator.

pub mod annotations;
pub mod bundle;
pub mod env;
pub mod error;
pub mod graph;
pub mod observation;
pub mod oracle;
pub mod panorama;
pub mod protocol;
pub mod rewards;
pub mod rollout;
pub mod server;
pub mod synth;
pub mod world;

pub use env::{Action, EpisodeState, StepInfo, StepResult, TaskConfig, TaskId};
pub use error::{Error, Result};
pub use world::World;
