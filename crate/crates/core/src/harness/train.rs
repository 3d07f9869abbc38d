//! The training iteration: collect, record, update, and periodically refresh the league.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::AgentType;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::rollout::{run_episode, run_indexed, stream_rng, Assignment, Controller, RolloutOptions};
use crate::league::{BetaStats, League, LeagueMember, UpdateReport};
use crate::learner::{AgentTrajectory, Batch, LossReport, PpoLearner};
use crate::policy::{ActMode, GroupId, PolicyGroup};

pub(crate) const PURPOSE_INIT: u64 = 0;
pub(crate) const PURPOSE_ITERATION: u64 = 1;
pub(crate) const PURPOSE_GATE: u64 = 2;
pub(crate) const PURPOSE_EVAL: u64 = 3;
pub(crate) const PURPOSE_UPDATE: u64 = 4;

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoint";

/// One line of the metrics stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub episodes: u64,
    /// Share of this iteration's episodes won by team A.
    pub win_rate: f64,
    /// Mean terminal reward of team A over this iteration's episodes.
    pub mean_reward: f64,
    pub beta_overall: Option<f64>,
    pub beta_types: Vec<Option<f64>>,
    pub league_size: usize,
    pub league_update: Option<LeagueUpdate>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_priority: f64,
    pub grad_norm: f64,
    pub clip_fraction: f64,
    pub samples: usize,
    /// Seconds since this process started the run; excluded from determinism checks.
    pub wall_clock: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeagueUpdate {
    pub candidate: GroupId,
    pub candidate_beta: f64,
    pub admitted: bool,
    pub evicted: Option<GroupId>,
}

impl LeagueUpdate {
    fn new(report: UpdateReport, beta: f64) -> Self {
        Self {
            candidate: report.candidate,
            candidate_beta: beta,
            admitted: report.admitted,
            evicted: report.evicted,
        }
    }
}

/// Everything that evolves during training.
#[derive(Clone, Debug)]
pub struct TrainState {
    /// Iterations completed.
    pub iteration: u64,
    pub episodes: u64,
    pub next_group_id: GroupId,
    pub frontier: PolicyGroup,
    pub learner: PpoLearner,
    pub league: League,
    pub stats: BetaStats,
}

impl TrainState {
    pub fn fresh(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.seed, PURPOSE_INIT, 0);
        let frontier = PolicyGroup::new(0, vec![config.net_shape(); AgentType::COUNT], &mut rng);
        Ok(Self {
            iteration: 0,
            episodes: 0,
            next_group_id: 1,
            learner: PpoLearner::new(config.learner.clone(), &frontier)?,
            frontier,
            league: League::new(config.league_capacity)?,
            stats: BetaStats::new(AgentType::COUNT),
        })
    }
}

pub struct Trainer {
    pub config: RunConfig,
    pub state: TrainState,
    started: Instant,
}

impl Trainer {
    pub fn new(config: RunConfig) -> Result<Self> {
        let state = TrainState::fresh(&config)?;
        Ok(Self {
            config,
            state,
            started: Instant::now(),
        })
    }

    pub fn from_state(config: RunConfig, state: TrainState) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state,
            started: Instant::now(),
        })
    }

    pub fn is_finished(&self) -> bool {
        self.state.iteration >= self.config.iterations
    }

    /// Collects one iteration's episodes with the current frontier.
    pub fn collect(&self, iteration: u64) -> Result<Vec<crate::harness::rollout::EpisodeResult>> {
        let cfg = &self.config;
        let st = &self.state;
        let mut rng = stream_rng(cfg.seed, PURPOSE_ITERATION, iteration);
        let plan: Vec<_> = (0..cfg.episodes_per_iteration)
            .map(|_| {
                let comb = st.league.sample_combination(AgentType::COUNT, &mut rng, cfg.p_pure);
                (comb, rng.gen::<u64>())
            })
            .collect();
        let opts = RolloutOptions {
            mode: ActMode::Sample,
            record_trajectories: true,
            record_replay: false,
        };
        run_indexed(plan.len(), cfg.parallel_envs, |e| {
            let (comb, seed) = plan[e];
            let asg = Assignment::for_combination(&st.frontier, &st.league, comb)?;
            run_episode(&cfg.scenario, &Controller::Policy(asg), seed, opts)
        })
    }

    /// Runs one training iteration, including a league update when due.
    pub fn iterate(&mut self) -> Result<MetricsRecord> {
        let it = self.state.iteration;
        let episodes = self.collect(it)?;
        let mut wins = 0usize;
        let mut reward = 0.0;
        let mut trajectories: Vec<AgentTrajectory> = Vec::new();
        for ep in episodes {
            self.state.stats.record_outcome(&ep.combination, ep.won());
            wins += ep.won() as usize;
            reward += ep.outcome.reward_for(crate::env::Team::A);
            trajectories.extend(ep.trajectories);
        }
        let n = self.config.episodes_per_iteration;
        let batch = Batch::build(&trajectories, AgentType::COUNT, &self.state.stats, &self.config.learner)?;
        let mut rng = stream_rng(self.config.seed, PURPOSE_UPDATE, it);
        let report = self.state.learner.update(&mut self.state.frontier, &batch, &mut rng)?;
        check_finite(&self.state.frontier, &report, it)?;
        self.state.iteration += 1;
        self.state.episodes += n as u64;

        let league_update = if self.state.iteration % self.config.league_update_interval == 0 {
            Some(self.league_update()?)
        } else {
            None
        };
        let mut rec = self.metrics(it, wins as f64 / n as f64, league_update, &report);
        rec.mean_reward = reward / n as f64;
        Ok(rec)
    }

    /// Freezes the frontier, seeds its win rate with gate episodes and offers it to the league.
    pub fn league_update(&mut self) -> Result<LeagueUpdate> {
        let id = self.state.next_group_id;
        self.state.next_group_id += 1;
        let mut candidate = self.state.frontier.freeze(id);
        let mut rng = stream_rng(self.config.seed, PURPOSE_GATE, self.state.iteration);
        let seeds: Vec<u64> = (0..self.config.eval_gate_games).map(|_| rng.gen()).collect();
        let opts = RolloutOptions {
            mode: ActMode::Greedy,
            record_trajectories: false,
            record_replay: false,
        };
        let results = {
            let asg = Assignment::uniform(&candidate, true)?;
            let controller = Controller::Policy(asg);
            run_indexed(seeds.len(), self.config.parallel_envs, |e| {
                run_episode(&self.config.scenario, &controller, seeds[e], opts).map(|r| r.won())
            })?
        };
        for won in results {
            candidate.perf.record(won);
        }
        let beta = candidate.beta();
        let (report, evicted) = self.state.league.offer(candidate);
        if let Some(g) = evicted {
            self.state.stats.remove_member(g.group_id);
        }
        log::info!(
            "league update at iteration {}: candidate {} beta {:.3} admitted {} evicted {:?}",
            self.state.iteration,
            id,
            beta,
            report.admitted,
            report.evicted
        );
        Ok(LeagueUpdate::new(report, beta))
    }

    fn metrics(&self, iteration: u64, win_rate: f64, league_update: Option<LeagueUpdate>, r: &LossReport) -> MetricsRecord {
        let stats = &self.state.stats;
        MetricsRecord {
            iteration,
            episodes: self.state.episodes,
            win_rate,
            mean_reward: 0.0,
            beta_overall: stats.overall_rate(),
            beta_types: (0..AgentType::COUNT).map(|d| stats.type_rate(d)).collect(),
            league_size: self.state.league.len(),
            league_update,
            policy_loss: r.policy_loss,
            value_loss: r.value_loss,
            entropy: r.entropy,
            mean_priority: r.mean_priority,
            grad_norm: r.grad_norm,
            clip_fraction: r.clip_fraction,
            samples: r.samples,
            wall_clock: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn check_finite(frontier: &PolicyGroup, report: &LossReport, iteration: u64) -> Result<()> {
    let params_ok = frontier
        .policies()
        .iter()
        .all(|p| p.actor.params.iter().chain(&p.critic.params).all(|t| t.is_finite()));
    if params_ok && report.policy_loss.is_finite() && report.value_loss.is_finite() {
        return Ok(());
    }
    Err(Error::Divergence {
        context: format!(
            "iteration {iteration}: policy loss {}, value loss {}, grad norm {}",
            report.policy_loss, report.value_loss, report.grad_norm
        ),
    })
}

/// Summary of a finished `train` call.
#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub iterations: u64,
    pub episodes: u64,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
    pub last: Option<MetricsRecord>,
}

/// Trains into `config.output_dir`, writing the metrics stream and
/// checkpoints. With `resume`, continues from the checkpoint found there;
/// metrics lines past that checkpoint are dropped first so the stream
/// matches an uninterrupted run.
pub fn train(config: RunConfig, resume: bool) -> Result<TrainSummary> {
    config.validate()?;
    let out = config.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ckpt = out.join(CHECKPOINT_DIR);
    let metrics_path = out.join(METRICS_FILE);

    let mut trainer = if resume && ckpt.exists() {
        let state = crate::harness::checkpoint::load_state(&ckpt, &config)?;
        truncate_metrics(&metrics_path, state.iteration)?;
        Trainer::from_state(config, state)?
    } else {
        if metrics_path.exists() {
            fs::remove_file(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
        }
        Trainer::new(config)?
    };
    let mut sink = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&metrics_path)
        .map_err(|e| Error::io(&metrics_path, e))?;

    let mut last = None;
    while !trainer.is_finished() {
        let rec = trainer.iterate()?;
        let line = serde_json::to_string(&rec).expect("metrics serialize");
        writeln!(sink, "{line}").map_err(|e| Error::io(&metrics_path, e))?;
        log::debug!("iteration {} win rate {:.3}", rec.iteration, rec.win_rate);
        if rec.league_update.is_some() {
            sink.flush().map_err(|e| Error::io(&metrics_path, e))?;
            crate::harness::checkpoint::save_state(&ckpt, &trainer.config, &trainer.state)?;
        }
        last = Some(rec);
    }
    sink.flush().map_err(|e| Error::io(&metrics_path, e))?;
    crate::harness::checkpoint::save_state(&ckpt, &trainer.config, &trainer.state)?;
    Ok(TrainSummary {
        iterations: trainer.state.iteration,
        episodes: trainer.state.episodes,
        checkpoint: ckpt,
        metrics: metrics_path,
        last,
    })
}

/// Parses a metrics stream.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Format {
                what: "metrics record",
                detail: e.to_string(),
            })
        })
        .collect()
}

fn truncate_metrics(path: &Path, completed: u64) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut kept = String::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: MetricsRecord = serde_json::from_str(line).map_err(|e| Error::Format {
            what: "metrics record",
            detail: e.to_string(),
        })?;
        if rec.iteration < completed {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    fs::write(path, kept).map_err(|e| Error::io(path, e))
}
