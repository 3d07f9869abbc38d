//! Per-type policies with hypernetwork heads conditioned on the identity vector.

mod group;
mod identity;
mod net;

pub use group::{choose_action, ActMode, ActOutput, GroupId, PolicyGroup, WinRecord};
pub use identity::{build_identity, IdentityRep, FRONTIER_SLOT, MIN_LEAGUE_SLOT};
pub use net::{ActorCriticNet, HeadCache, HyperNet, NetConfig, NetShape};

#[cfg(test)]
mod tests;
