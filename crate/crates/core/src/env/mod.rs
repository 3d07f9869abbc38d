//! Two-team heterogeneous combat arena.
//!
//! Drones, missile vehicles and gun vehicles fight in a continuous square
//! arena with discrete simultaneous ticks. Rewards are sparse and zero-sum:
//! nothing until the episode ends, then `0.1 * survivor difference` to each
//! agent of the winning team and its negation to each agent of the loser.

mod arena;
mod expert;
mod replay;
mod types;

pub use arena::{settle, AgentState, Arena, EpisodeOutcome, Observation, StepResult, Winner, WorldState, REWARD_SCALE};
pub use expert::{scripted_expert, REPAIR_THRESHOLD};
pub use replay::{AgentRecord, Replay, ReplayLine};
pub use types::*;
