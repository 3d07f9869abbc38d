//! Greedy evaluation against the scripted opponent, and replay export.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Replay, ScenarioConfig, Winner};
use crate::error::{Error, Result};
use crate::harness::config::{ControllerKind, EvalMode};
use crate::harness::rollout::{run_episode, run_indexed, stream_rng, Assignment, Controller, RolloutOptions};
use crate::harness::train::PURPOSE_EVAL;
use crate::league::League;
use crate::policy::{ActMode, PolicyGroup};

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub mode: EvalMode,
    pub controller: ControllerKind,
    pub episodes: usize,
    pub seed: u64,
    pub parallel: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub controller: ControllerKind,
    pub episodes: usize,
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
    pub win_rate: f64,
    /// Wilson 95% interval for the win rate.
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_length: f64,
}

/// Wilson score interval at z = 1.96.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Policies available to a `checkpoint` controller.
#[derive(Clone, Copy)]
pub struct PolicySet<'a> {
    pub frontier: &'a PolicyGroup,
    pub league: &'a League,
}

fn episode_plan(set: Option<PolicySet>, cfg: &EvalConfig) -> Result<Vec<(Option<EpisodeSource>, u64)>> {
    let mut rng = stream_rng(cfg.seed, PURPOSE_EVAL, 0);
    if cfg.controller == ControllerKind::Checkpoint {
        let set = set.ok_or_else(|| Error::Config("checkpoint controller needs policies".into()))?;
        if cfg.mode == EvalMode::FrontierExclusive && set.league.is_empty() {
            return Err(Error::Config("frontier_exclusive evaluation needs a non-empty league".into()));
        }
    }
    (0..cfg.episodes)
        .map(|_| {
            let source = match (cfg.controller, set) {
                (ControllerKind::Checkpoint, Some(s)) => Some(match cfg.mode {
                    EvalMode::Pure => EpisodeSource::Frontier,
                    EvalMode::FrontierInclusive => {
                        EpisodeSource::Mixed(s.league.sample_combination(s.frontier.num_types(), &mut rng, 0.0))
                    }
                    EvalMode::FrontierExclusive => EpisodeSource::Member(rng.gen_range(0..s.league.len())),
                }),
                _ => None,
            };
            Ok((source, rng.gen::<u64>()))
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
enum EpisodeSource {
    Frontier,
    Mixed(crate::league::MixedCombination),
    Member(usize),
}

fn controller_for<'a>(kind: ControllerKind, set: Option<PolicySet<'a>>, source: Option<EpisodeSource>) -> Result<Controller<'a>> {
    Ok(match (kind, set, source) {
        (ControllerKind::Scripted, ..) => Controller::Scripted,
        (ControllerKind::Random, ..) => Controller::Random,
        (ControllerKind::Checkpoint, Some(s), Some(src)) => Controller::Policy(match src {
            EpisodeSource::Frontier => Assignment::uniform(s.frontier, false)?,
            EpisodeSource::Mixed(c) => Assignment::for_combination(s.frontier, s.league, c)?,
            EpisodeSource::Member(k) => Assignment::uniform(&s.league.members()[k], true)?,
        }),
        _ => return Err(Error::Config("checkpoint controller needs policies".into())),
    })
}

/// Plays `cfg.episodes` greedy episodes and summarizes team A's results.
pub fn evaluate(scenario: &ScenarioConfig, set: Option<PolicySet>, cfg: &EvalConfig) -> Result<EvalReport> {
    if cfg.episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    let plan = episode_plan(set, cfg)?;
    let opts = RolloutOptions {
        mode: ActMode::Greedy,
        record_trajectories: false,
        record_replay: false,
    };
    let outcomes = run_indexed(plan.len(), cfg.parallel, |e| {
        let (source, seed) = plan[e];
        let c = controller_for(cfg.controller, set, source)?;
        Ok(run_episode(scenario, &c, seed, opts)?.outcome)
    })?;
    let wins = outcomes.iter().filter(|o| o.winner == Winner::Team(crate::env::Team::A)).count();
    let draws = outcomes.iter().filter(|o| o.winner == Winner::Draw).count();
    let (ci_low, ci_high) = wilson_interval(wins, outcomes.len());
    Ok(EvalReport {
        mode: cfg.mode,
        controller: cfg.controller,
        episodes: outcomes.len(),
        wins,
        losses: outcomes.len() - wins - draws,
        draws,
        win_rate: wins as f64 / outcomes.len() as f64,
        ci_low,
        ci_high,
        mean_length: outcomes.iter().map(|o| o.length as f64).sum::<f64>() / outcomes.len() as f64,
    })
}

/// Loads a checkpoint directory and evaluates it. A `scenario` override
/// replaces the one stored with the checkpoint.
pub fn evaluate_checkpoint(dir: &Path, scenario: Option<&ScenarioConfig>, cfg: &EvalConfig) -> Result<EvalReport> {
    let (run, frontier, league) = crate::harness::checkpoint::load_policies(dir)?;
    let set = PolicySet {
        frontier: &frontier,
        league: &league,
    };
    evaluate(scenario.unwrap_or(&run.scenario), Some(set), cfg)
}

/// Records one greedy episode. The seed fixes both the episode and, for
/// mixed modes, the sampled combination.
pub fn replay_episode(scenario: &ScenarioConfig, set: Option<PolicySet>, cfg: &EvalConfig) -> Result<Replay> {
    let one = EvalConfig { episodes: 1, ..cfg.clone() };
    let (source, seed) = episode_plan(set, &one)?[0];
    let c = controller_for(cfg.controller, set, source)?;
    let opts = RolloutOptions {
        mode: ActMode::Greedy,
        record_trajectories: false,
        record_replay: true,
    };
    Ok(run_episode(scenario, &c, seed, opts)?.replay.expect("replay requested"))
}

pub fn replay_checkpoint(dir: &Path, scenario: Option<&ScenarioConfig>, cfg: &EvalConfig) -> Result<Replay> {
    let (run, frontier, league) = crate::harness::checkpoint::load_policies(dir)?;
    let set = PolicySet {
        frontier: &frontier,
        league: &league,
    };
    replay_episode(scenario.unwrap_or(&run.scenario), Some(set), cfg)
}

/// Re-emits a recorded replay after validating it.
pub fn replay_passthrough(input: impl BufRead, output: impl Write) -> Result<()> {
    let replay = Replay::read(input)?;
    replay.write(output).map_err(|e| Error::io("<replay output>", e))
}
