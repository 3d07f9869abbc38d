//! Episode collection against the scripted opponent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{scripted_expert, Action, AgentType, Arena, EpisodeOutcome, Replay, ScenarioConfig, Team};
use crate::error::{Error, Result};
use crate::league::{League, LeagueMember, MixedCombination, PolicySource};
use crate::learner::{AgentTrajectory, Step};
use crate::nn::Tensor2;
use crate::policy::{build_identity, ActMode, HeadCache, IdentityRep, PolicyGroup};

/// The policy group, identity vector and ownership for each agent type.
#[derive(Clone, Debug)]
pub struct Assignment<'a> {
    pub combination: MixedCombination,
    pub groups: Vec<&'a PolicyGroup>,
    pub identities: Vec<IdentityRep>,
    pub league_controlled: Vec<bool>,
}

impl<'a> Assignment<'a> {
    /// Frontier for every type except the combination's replaced type,
    /// which runs the named league member.
    pub fn for_combination(frontier: &'a PolicyGroup, league: &'a League, combination: MixedCombination) -> Result<Self> {
        let m = frontier.num_types();
        let (member, beta) = match combination.member {
            Some(id) => {
                let g = league
                    .get(id)
                    .ok_or_else(|| Error::Contract(format!("combination names absent member {id}")))?;
                (Some(g), g.beta())
            }
            None => (None, 0.0),
        };
        let mut groups = Vec::with_capacity(m);
        let mut identities = Vec::with_capacity(m);
        let mut league_controlled = Vec::with_capacity(m);
        for d in 0..m {
            let from_league = matches!(combination.source(d), PolicySource::League(_));
            groups.push(if from_league { member.expect("mixed combination has a member") } else { frontier });
            identities.push(build_identity(d, m, combination.replaced_type, beta)?);
            league_controlled.push(from_league);
        }
        Ok(Self {
            combination,
            groups,
            identities,
            league_controlled,
        })
    }

    /// One group for every type with the all-frontier identity.
    pub fn uniform(group: &'a PolicyGroup, league_controlled: bool) -> Result<Self> {
        let m = group.num_types();
        Ok(Self {
            combination: MixedCombination::pure(),
            groups: vec![group; m],
            identities: (0..m).map(|d| build_identity(d, m, None, 0.0)).collect::<Result<_>>()?,
            league_controlled: vec![league_controlled; m],
        })
    }
}

/// Who plays team A. Team B is always the scripted expert.
#[derive(Clone, Debug)]
pub enum Controller<'a> {
    Policy(Assignment<'a>),
    Scripted,
    /// Uniform over legal actions.
    Random,
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub seed: u64,
    pub combination: MixedCombination,
    pub outcome: EpisodeOutcome,
    /// Team A trajectories, empty unless requested.
    pub trajectories: Vec<AgentTrajectory>,
    pub replay: Option<Replay>,
}

impl EpisodeResult {
    pub fn won(&self) -> bool {
        self.outcome.won_by(Team::A)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RolloutOptions {
    pub mode: ActMode,
    pub record_trajectories: bool,
    pub record_replay: bool,
}

/// Plays one full episode from `seed`.
pub fn run_episode(scenario: &ScenarioConfig, controller: &Controller, seed: u64, opts: RolloutOptions) -> Result<EpisodeResult> {
    let mut arena = Arena::reset(scenario, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let half = arena.num_agents() / 2;
    let mut steps: Vec<Vec<Step>> = vec![Vec::new(); half];
    let mut last_tick = vec![0u32; half];
    let mut replay = opts.record_replay.then(Replay::default);

    let heads: Vec<HeadCache> = match controller {
        Controller::Policy(a) => (0..a.groups.len())
            .map(|d| a.groups[d].policy(d)?.head_cache(a.identities[d].as_slice()))
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };

    while !arena.is_done() {
        let mut actions = scripted_expert(&arena, Team::B)?;
        match controller {
            Controller::Scripted => {
                let own = scripted_expert(&arena, Team::A)?;
                actions[..half].copy_from_slice(&own[..half]);
            }
            Controller::Random => {
                for (i, slot) in actions.iter_mut().enumerate().take(half) {
                    if !arena.state().agents[i].alive {
                        continue;
                    }
                    let mask = arena.action_mask(i)?;
                    let legal: Vec<usize> = (0..mask.len()).filter(|&k| mask[k]).collect();
                    *slot = Action::from_index(legal[rng.gen_range(0..legal.len())]).expect("legal index");
                }
            }
            Controller::Policy(asg) => {
                for kind in AgentType::ALL {
                    let d = kind.index();
                    let ids: Vec<usize> = (0..half)
                        .filter(|&i| {
                            let a = &arena.state().agents[i];
                            a.alive && a.kind == kind
                        })
                        .collect();
                    if ids.is_empty() {
                        continue;
                    }
                    let mut rows = Vec::with_capacity(ids.len());
                    let mut masks = Vec::with_capacity(ids.len());
                    for &i in &ids {
                        rows.push(arena.observe(i)?.features);
                        masks.push(arena.action_mask(i)?);
                    }
                    let obs = Tensor2::from_rows(&rows)?;
                    let mask_refs: Vec<&[bool]> = masks.iter().map(|m| &m[..]).collect();
                    let out = asg.groups[d].act_batch(d, &obs, &heads[d], &mask_refs, &mut rng, opts.mode)?;
                    for (k, (&i, o)) in ids.iter().zip(out).enumerate() {
                        actions[i] = Action::from_index(o.action).expect("policy index in range");
                        last_tick[i] = arena.state().tick;
                        if opts.record_trajectories {
                            steps[i].push(Step {
                                observation: std::mem::take(&mut rows[k]),
                                identity: asg.identities[d].as_slice().to_vec(),
                                mask: masks[k].to_vec(),
                                action: o.action,
                                log_prob: o.log_prob,
                                value: o.value,
                                reward: 0.0,
                                done: false,
                            });
                        }
                    }
                }
            }
        }
        if let Some(r) = replay.as_mut() {
            r.record_step(&arena, &actions);
        }
        arena.step(&actions)?;
    }
    if let Some(r) = replay.as_mut() {
        r.record_end(&arena);
    }
    let outcome = arena.outcome().cloned().expect("finished episode has an outcome");
    let reward = outcome.reward_for(Team::A);

    let mut trajectories = Vec::new();
    if let Controller::Policy(asg) = controller {
        for (i, mut s) in steps.into_iter().enumerate() {
            let Some(last) = s.last_mut() else { continue };
            last.reward = reward;
            last.done = true;
            let d = arena.state().agents[i].kind.index();
            trajectories.push(AgentTrajectory {
                agent_type: d,
                combination: asg.combination,
                league_controlled: asg.league_controlled[d],
                steps: s,
                terminal_delay: arena.state().tick - 1 - last_tick[i],
            });
        }
    }
    let combination = match controller {
        Controller::Policy(a) => a.combination,
        _ => MixedCombination::pure(),
    };
    Ok(EpisodeResult {
        seed,
        combination,
        outcome,
        trajectories,
        replay,
    })
}

/// Runs `f(0..n)` over up to `workers` scoped threads and returns the
/// results in index order, so the output does not depend on scheduling.
pub fn run_indexed<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(&f).collect();
    }
    let mut slots: Vec<Option<Result<T>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..workers)
            .map(|w| s.spawn(move || (w..n).step_by(workers).map(|i| (i, f(i))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("rollout worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every index ran")).collect()
}

/// Deterministic generator for a (seed, purpose, index) triple.
pub fn stream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 48) | (index & ((1 << 48) - 1)));
    rng
}
