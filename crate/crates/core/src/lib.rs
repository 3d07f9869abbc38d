//! Prioritized heterogeneous league reinforcement learning.
//!
//! The crate is split along the training pipeline:
//!
//! * [`nn`]: dense layers, hypernetwork layers, reverse-mode tape, Adam.
//! * [`env`]: two-team heterogeneous combat arena and the scripted expert.
//! * [`policy`]: per-type hypernetwork actor-critics and identity vectors.
//! * [`league`]: frozen snapshot league, combination sampling, win-rate tables.
//! * [`learner`]: GAE, advantage prioritization and dual-clip PPO.
//! * [`harness`]: training loop, evaluation, replay and checkpoints.

pub mod env;
pub mod error;
pub mod harness;
pub mod league;
pub mod learner;
pub mod nn;
pub mod policy;

pub use error::{Error, Result};
