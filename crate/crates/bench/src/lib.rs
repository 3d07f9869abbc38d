//! Fixtures shared by the criterion benches.

use phlrl::env::{scripted_expert, Arena, ScenarioConfig, Team};
use phlrl::learner::{AgentTrajectory, Batch, LearnerConfig, Step};
use phlrl::league::{BetaStats, MixedCombination};
use phlrl::nn::Tensor2;
use phlrl::policy::{build_identity, NetConfig, NetShape, PolicyGroup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn shape(scenario: &ScenarioConfig, hidden: usize) -> NetShape {
    NetShape {
        obs_len: scenario.observation_len(),
        cond_len: 6,
        num_actions: phlrl::env::NUM_ACTIONS,
        config: NetConfig {
            hidden: vec![hidden, hidden],
            hyper_hidden: 64,
            head_gain: 0.1,
        },
    }
}

pub fn group(scenario: &ScenarioConfig, hidden: usize) -> PolicyGroup {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    PolicyGroup::new(0, vec![shape(scenario, hidden); 3], &mut rng)
}

pub fn observations(rows: usize, cols: usize) -> Tensor2 {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor2::new(rows, cols, data).expect("sized")
}

/// An arena advanced `ticks` steps with both teams scripted.
pub fn warmed_arena(scenario: &ScenarioConfig, ticks: usize) -> Arena {
    let mut arena = Arena::reset(scenario, 7).expect("valid scenario");
    for _ in 0..ticks {
        if arena.is_done() {
            break;
        }
        let mut a = scripted_expert(&arena, Team::A).expect("expert");
        let b = scripted_expert(&arena, Team::B).expect("expert");
        let half = a.len() / 2;
        a[half..].copy_from_slice(&b[half..]);
        arena.step(&a).expect("legal");
    }
    arena
}

/// A single-type batch of `episodes` synthetic trajectories of length `len`.
pub fn batch(obs_len: usize, episodes: usize, len: usize) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let identity = build_identity(0, 3, None, 0.0).expect("identity");
    let trajectories: Vec<AgentTrajectory> = (0..episodes)
        .map(|_| AgentTrajectory {
            agent_type: 0,
            combination: MixedCombination::pure(),
            league_controlled: false,
            terminal_delay: 0,
            steps: (0..len)
                .map(|t| Step {
                    observation: (0..obs_len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    identity: identity.as_slice().to_vec(),
                    mask: vec![true; phlrl::env::NUM_ACTIONS],
                    action: rng.gen_range(0..phlrl::env::NUM_ACTIONS),
                    log_prob: -2.5,
                    value: 0.0,
                    reward: if t + 1 == len { 0.7 } else { 0.0 },
                    done: t + 1 == len,
                })
                .collect(),
        })
        .collect();
    Batch::build(&trajectories, 3, &BetaStats::new(3), &LearnerConfig::default()).expect("batch")
}
