//! Advantage estimation, prioritization and the PPO update.

pub mod advantage;
pub mod batch;
pub mod config;
pub mod ppo;

pub use advantage::{gae, normalize_advantages, priority_factor, priority_from_rates};
pub use batch::{AgentTrajectory, Batch, SampleGroup, Step};
pub use config::LearnerConfig;
pub use ppo::{actor_objective, critic_objective, dual_clip_surrogate, ActorObjective, LossReport, PpoLearner};
