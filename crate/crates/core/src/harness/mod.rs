//! Training loop, evaluation, replay and checkpoints.
//!
//! Team A is the learning side; team B is always the scripted expert. League
//! members appear only as partners inside team A.

pub mod checkpoint;
pub mod config;
pub mod evaluate;
pub mod rollout;
pub mod train;

pub use checkpoint::{load_policies, load_state, save_state};
pub use config::{ControllerKind, EvalMode, RunConfig};
pub use evaluate::{
    evaluate, evaluate_checkpoint, replay_checkpoint, replay_episode, replay_passthrough, wilson_interval, EvalConfig,
    EvalReport, PolicySet,
};
pub use rollout::{run_episode, run_indexed, stream_rng, Assignment, Controller, EpisodeResult, RolloutOptions};
pub use train::{read_metrics, train, LeagueUpdate, MetricsRecord, TrainState, TrainSummary, Trainer, CHECKPOINT_DIR, METRICS_FILE};
