//! Frozen-snapshot league, per-episode combination sampling and win-rate tables.

mod combination;
mod pool;
mod stats;

pub use combination::{MixedCombination, PolicySource};
pub use pool::{closest_adjacent_pair, League, LeagueMember, UpdateReport};
pub use stats::{BetaStats, DECAY_THRESHOLD};

#[cfg(test)]
mod tests;
