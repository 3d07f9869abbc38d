//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use phlrl::env::{Action, Arena, ScenarioConfig, NUM_ACTIONS};
use phlrl::harness::{
    evaluate, ControllerKind, EvalConfig, EvalMode, PolicySet, RunConfig, Trainer,
};
use phlrl::league::{closest_adjacent_pair, BetaStats, League, LeagueMember};
use phlrl::learner::{
    actor_objective, critic_objective, gae, priority_factor, priority_from_rates, AgentTrajectory, Batch,
    LearnerConfig, SampleGroup,
};
use phlrl::nn::{Tape, Tensor2};
use phlrl::policy::{build_identity, ActorCriticNet, GroupId, NetConfig, NetShape, WinRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: impl AsRef<str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // Written past the test harness capture so the line shows in every run.
    let line = format!("criterion {n} [{name}]: {verdict} ({})\n", detail.as_ref());
    let _ = std::io::stderr().write_all(line.as_bytes());
}

// ---------------------------------------------------------------- 1

#[test]
fn c1_formula_oracles() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g, l) = (rng.gen_range(0.9..1.0), rng.gen_range(0.9..1.0));
        let (adv, _) = gae(&r, &v, g, l).unwrap();
        for t in 0..n {
            let direct: f64 = (t..n)
                .map(|k| (g * l).powi((k - t) as i32) * (r[k] + g * v[k + 1] - v[k]))
                .sum();
            worst = worst.max((adv[t] - direct).abs());
        }
    }
    let gae_secs = t0.elapsed().as_secs_f64();

    // A_β through the win-rate table, against the bare formula on a 10x10x10 grid.
    let mut mismatches = 0;
    for i in 0..10 {
        let psi = 0.05 + 0.1 * i as f64;
        for a in 0..10 {
            for b in 0..10 {
                // Type 0 cell at a/9, type 1 cell at b/9.
                let mut stats = BetaStats::new(2);
                stats.set_cell(1, 0, WinRecord { wins: a as f64, games: 9.0 });
                stats.set_cell(1, 1, WinRecord { wins: b as f64, games: 9.0 });
                let (b0, b1) = (a as f64 / 9.0, b as f64 / 9.0);
                let overall = (b0 + b1) / 2.0;
                let direct = (psi + overall) / (psi + b0);
                let via = priority_factor(&stats, Some(0), psi);
                if via != direct || priority_from_rates(psi, overall, b0) != direct {
                    mismatches += 1;
                }
            }
        }
    }
    let pass = worst <= 1e-10 && gae_secs < 5.0 && mismatches == 0;
    report(
        1,
        "formula oracles",
        pass,
        format!("GAE max |diff| {worst:.2e} in {gae_secs:.2}s; A_beta mismatches {mismatches}/1000"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 2

#[test]
fn c2_identity_worked_example() {
    let b = 0.37;
    let f = |d| build_identity(d, 4, Some(1), b).unwrap().as_slice().to_vec();
    let expect = [
        vec![1.0, b, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        vec![1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0],
        vec![1.0, b, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    ];
    let got = [f(0), f(1), f(2)];
    let pass = got == expect;
    report(2, "identity worked example", pass, format!("F1 {:?} F2 {:?} F3 {:?}", got[0], got[1], got[2]));
    assert!(pass);
}

// ---------------------------------------------------------------- 3

fn random_group(rng: &mut ChaCha8Rng, obs: usize, cond: usize, actions: usize, rows: usize) -> SampleGroup {
    let mut masks = Vec::new();
    let mut chosen = Vec::new();
    for _ in 0..rows {
        let m: Vec<bool> = (0..actions).map(|k| k == 0 || rng.gen_bool(0.7)).collect();
        let legal: Vec<usize> = (0..actions).filter(|&k| m[k]).collect();
        chosen.push(*legal.choose(rng).unwrap());
        masks.extend(m);
    }
    let obs_rows: Vec<Vec<f64>> = (0..rows).map(|_| (0..obs).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    SampleGroup {
        identity: (0..cond).map(|_| rng.gen_range(0.0..1.0)).collect(),
        observations: Tensor2::from_rows(&obs_rows).unwrap(),
        masks,
        actions: chosen,
        old_log_probs: (0..rows).map(|_| rng.gen_range(-2.5..-0.3)).collect(),
        advantages: (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        priorities: (0..rows).map(|_| rng.gen_range(0.5..2.0)).collect(),
        returns: (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        replaced: vec![None; rows],
    }
}

fn rel_err(fd: f64, an: f64) -> f64 {
    (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6)
}

#[test]
fn c3_gradient_correctness() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut actor_worst, mut critic_worst, mut gen_worst) = (0.0f64, 0.0f64, 0.0f64);
    let instances = 20;
    let h = 1e-6;
    for _ in 0..instances {
        let shape = NetShape {
            obs_len: rng.gen_range(2..5),
            cond_len: rng.gen_range(2..4),
            num_actions: rng.gen_range(2..5),
            config: NetConfig {
                hidden: vec![rng.gen_range(2..5)],
                hyper_hidden: rng.gen_range(2..4),
                head_gain: 1.0,
            },
        };
        let mut net = ActorCriticNet::init(shape.clone(), &mut rng);
        let groups: Vec<SampleGroup> = (0..2)
            .map(|_| {
                let rows = rng.gen_range(2..5);
                random_group(&mut rng, shape.obs_len, shape.cond_len, shape.num_actions, rows)
            })
            .collect();
        let total = groups.iter().map(SampleGroup::len).sum();
        let cfg = LearnerConfig {
            entropy_coef: 0.01,
            ..Default::default()
        };
        let encoder_slots = 2 * net.actor.encoder.layers.len();

        let a = actor_objective(&net, &groups, total, &cfg).unwrap();
        for p in 0..net.actor.params.len() {
            for i in 0..net.actor.params[p].len() {
                let orig = net.actor.params[p].data()[i];
                net.actor.params[p].data_mut()[i] = orig + h;
                let up = actor_objective(&net, &groups, total, &cfg).unwrap().loss;
                net.actor.params[p].data_mut()[i] = orig - h;
                let dn = actor_objective(&net, &groups, total, &cfg).unwrap().loss;
                net.actor.params[p].data_mut()[i] = orig;
                let e = rel_err((up - dn) / (2.0 * h), a.grads[p].data()[i]);
                if p >= encoder_slots {
                    gen_worst = gen_worst.max(e);
                }
                actor_worst = actor_worst.max(e);
            }
        }
        let (_, cg) = critic_objective(&net, &groups, total, &cfg).unwrap();
        for p in 0..net.critic.params.len() {
            for i in 0..net.critic.params[p].len() {
                let orig = net.critic.params[p].data()[i];
                net.critic.params[p].data_mut()[i] = orig + h;
                let up = critic_objective(&net, &groups, total, &cfg).unwrap().0;
                net.critic.params[p].data_mut()[i] = orig - h;
                let dn = critic_objective(&net, &groups, total, &cfg).unwrap().0;
                net.critic.params[p].data_mut()[i] = orig;
                critic_worst = critic_worst.max(rel_err((up - dn) / (2.0 * h), cg[p].data()[i]));
            }
        }

        // Gradient with respect to the identity input of the generator.
        let obs = Tensor2::from_rows(&[(0..shape.obs_len).map(|_| rng.gen_range(-1.0..1.0)).collect()]).unwrap();
        let mut cond: Vec<f64> = (0..shape.cond_len).map(|_| rng.gen_range(0.0..1.0)).collect();
        let f = |c: &[f64]| net.actor.forward(&obs, c).unwrap().sum();
        let mut tape = Tape::new();
        let bound = net.actor.bind(&mut tape);
        let o = tape.constant(obs.clone());
        let cv = tape.constant(Tensor2::row(&cond));
        let out = net.actor.record(&mut tape, &bound, o, cv).unwrap();
        let s = tape.sum(out);
        let g = tape.backward(s).unwrap();
        let gc = g.wrt(cv).unwrap().clone();
        for k in 0..cond.len() {
            let orig = cond[k];
            cond[k] = orig + h;
            let up = f(&cond);
            cond[k] = orig - h;
            let dn = f(&cond);
            cond[k] = orig;
            gen_worst = gen_worst.max(rel_err((up - dn) / (2.0 * h), gc.data()[k]));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = actor_worst <= 1e-4 && critic_worst <= 1e-4 && gen_worst <= 1e-4 && secs < 30.0;
    report(
        3,
        "gradient correctness",
        pass,
        format!(
            "{instances} instances; max rel err actor {actor_worst:.2e} critic {critic_worst:.2e} generator {gen_worst:.2e}; {secs:.1}s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 4

#[derive(Clone, Debug, PartialEq)]
struct Member {
    id: GroupId,
    rec: WinRecord,
}

impl LeagueMember for Member {
    fn id(&self) -> GroupId {
        self.id
    }
    fn record(&self) -> &WinRecord {
        &self.rec
    }
    fn record_mut(&mut self) -> &mut WinRecord {
        &mut self.rec
    }
}

/// Reference league: full re-sort and an all-pairs search on every insert.
fn oracle_offer(members: &mut Vec<Member>, cap: usize, cand: Member) -> Option<GroupId> {
    let beta = |m: &Member| m.rec.win_rate().unwrap_or(0.0);
    let full = members.len() >= cap;
    if full {
        let min = members.iter().map(beta).fold(f64::INFINITY, f64::min);
        if !(cand.rec.wins > 0.0 && beta(&cand) > min) {
            return None;
        }
    }
    members.push(cand);
    members.sort_by(|a, b| beta(b).total_cmp(&beta(a)).then(a.id.cmp(&b.id)));
    if members.len() <= cap {
        return None;
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for p in 0..members.len() {
        for q in p + 1..members.len() {
            let gap = (beta(&members[p]) - beta(&members[q])).abs();
            if best.map_or(true, |(g, _, _)| gap < g) {
                best = Some((gap, p, q));
            }
        }
    }
    let (_, p, q) = best.unwrap();
    let victim = if members[p].id > members[q].id { p } else { q };
    Some(members.remove(victim).id)
}

#[test]
fn c4_league_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sequences = 100_000;
    let (mut disagreements, mut overflows) = (0usize, 0usize);
    for _ in 0..sequences {
        let cap = rng.gen_range(1..6);
        let mut league: League<Member> = League::new(cap).unwrap();
        let mut oracle: Vec<Member> = Vec::new();
        let mut next = 1;
        for _ in 0..rng.gen_range(1..12) {
            if !oracle.is_empty() && rng.gen_bool(0.2) {
                let id = oracle.choose(&mut rng).unwrap().id;
                let won = rng.gen_bool(0.5);
                league.record_member(id, won).unwrap();
                let m = oracle.iter_mut().find(|m| m.id == id).unwrap();
                m.rec.record(won);
                oracle.sort_by(|a, b| {
                    let (x, y) = (a.rec.win_rate().unwrap_or(0.0), b.rec.win_rate().unwrap_or(0.0));
                    y.total_cmp(&x).then(a.id.cmp(&b.id))
                });
                continue;
            }
            // Coarse win counts make exact β ties common.
            let games = rng.gen_range(1..5) as f64;
            let cand = Member {
                id: next,
                rec: WinRecord {
                    wins: rng.gen_range(0..=games as u32) as f64,
                    games,
                },
            };
            next += 1;
            let want = oracle_offer(&mut oracle, cap, cand.clone());
            let (rep, _) = league.offer(cand);
            if rep.evicted != want {
                disagreements += 1;
            }
            if league.len() > cap {
                overflows += 1;
            }
            let ids: Vec<GroupId> = league.members().iter().map(|m| m.id).collect();
            if ids != oracle.iter().map(|m| m.id).collect::<Vec<_>>() {
                disagreements += 1;
            }
        }
    }

    // Candidate inside the closest pair is itself evicted.
    let mk = |id, wins, games| Member {
        id,
        rec: WinRecord { wins, games },
    };
    let mut l = League::from_members(3, vec![mk(1, 1.0, 10.0), mk(2, 45.0, 100.0), mk(3, 9.0, 10.0)]).unwrap();
    let (rep, _) = l.offer(mk(4, 50.0, 100.0));
    let candidate_case = rep.evicted == Some(4) && l.len() == 3;
    let pair_case = closest_adjacent_pair(&[0.9, 0.5, 0.45, 0.1]) == Some((1, 2));

    let pass = disagreements == 0 && overflows == 0 && candidate_case && pair_case;
    report(
        4,
        "league laws",
        pass,
        format!(
            "{sequences} sequences; oracle disagreements {disagreements}; capacity violations {overflows}; candidate evicted from closest pair: {candidate_case}"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 5

#[test]
fn c5_sampler_distribution() {
    let mk = |id| Member {
        id,
        rec: WinRecord {
            wins: id as f64,
            games: 10.0,
        },
    };
    let league = League::from_members(5, (1..=5).map(mk).collect()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut cells: BTreeMap<(GroupId, usize), usize> = BTreeMap::new();
    for _ in 0..draws {
        let c = league.sample_combination(3, &mut rng, 0.0);
        *cells.entry(c.league_cell().expect("p_pure = 0")).or_default() += 1;
    }
    let worst = cells
        .values()
        .map(|&n| (n as f64 / draws as f64 - 1.0 / 15.0).abs())
        .fold(0.0, f64::max);
    let pass = cells.len() == 15 && worst <= 0.01;
    report(5, "sampler distribution", pass, format!("{} cells, max |freq - 1/15| {worst:.4}", cells.len()));
    assert!(pass);
}

// ---------------------------------------------------------------- 6

fn random_episode(sc: &ScenarioConfig, seed: u64, probe: bool) -> (Vec<(u32, Vec<Action>)>, Vec<Vec<f64>>, bool) {
    let mut arena = Arena::reset(sc, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let mut log = Vec::new();
    let mut rewards = Vec::new();
    let mut sound = true;
    while !arena.is_done() {
        let acts: Vec<Action> = (0..arena.num_agents())
            .map(|i| {
                if !arena.state().agents[i].alive {
                    return Action::Hold;
                }
                let m = arena.action_mask(i).unwrap();
                let legal: Vec<usize> = (0..NUM_ACTIONS).filter(|&k| m[k]).collect();
                Action::from_index(*legal.choose(&mut rng).unwrap()).unwrap()
            })
            .collect();
        if probe {
            // Every permitted action of one living agent must be accepted.
            if let Some(i) = (0..arena.num_agents()).find(|&i| arena.state().agents[i].alive) {
                let m = arena.action_mask(i).unwrap();
                for k in (0..NUM_ACTIONS).filter(|&k| m[k]) {
                    let mut trial = arena.clone();
                    let mut a = acts.clone();
                    a[i] = Action::from_index(k).unwrap();
                    sound &= trial.step(&a).is_ok();
                }
            }
        }
        let r = arena.step(&acts).unwrap();
        rewards.push(r.rewards);
        log.push((arena.state().tick, acts));
    }
    (log, rewards, sound)
}

#[test]
fn c6_environment_laws() {
    let t0 = Instant::now();
    let sc = ScenarioConfig::tiny();
    let episodes = 10_000;
    let (mut zero_sum, mut sparse, mut deterministic, mut sound) = (0, 0, 0, 0);
    for seed in 0..episodes {
        let (log, rewards, ok) = random_episode(&sc, seed, seed % 10 == 0);
        let (log2, rewards2, _) = random_episode(&sc, seed, false);
        let last = rewards.last().unwrap();
        zero_sum += (last.iter().sum::<f64>().abs() < 1e-12) as usize;
        sparse += rewards[..rewards.len() - 1].iter().all(|r| r.iter().all(|&x| x == 0.0)) as usize;
        deterministic += (log == log2 && rewards == rewards2) as usize;
        sound += ok as usize;
    }
    let laws_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mirror_cfg = EvalConfig {
        mode: EvalMode::Pure,
        controller: ControllerKind::Scripted,
        episodes: 500,
        seed: 6,
        parallel: 1,
    };
    let mirror = evaluate(&ScenarioConfig::default(), None, &mirror_cfg).unwrap();
    let mirror_secs = t1.elapsed().as_secs_f64();
    let n = episodes as usize;
    let pass = zero_sum == n
        && sparse == n
        && deterministic == n
        && sound == n
        && (0.4..=0.6).contains(&mirror.win_rate)
        && mirror_secs < 120.0;
    report(
        6,
        "environment laws",
        pass,
        format!(
            "{episodes} random episodes in {laws_secs:.1}s: zero-sum {zero_sum}, sparse {sparse}, deterministic {deterministic}, mask-sound {sound}; scripted mirror win rate {:.3} (B {}, draws {}) in {mirror_secs:.1}s",
            mirror.win_rate, mirror.losses, mirror.draws
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 7

const LEARNING_SEEDS: [u64; 3] = [0, 1, 2];
const LEARNING_ITERATIONS: u64 = 62;
const LEARNING_EPISODES: usize = 32;
const SCORE_EPISODES: usize = 200;

fn learning_config(seed: u64, out: &std::path::Path) -> RunConfig {
    RunConfig {
        seed,
        iterations: LEARNING_ITERATIONS,
        episodes_per_iteration: LEARNING_EPISODES,
        league_update_interval: 10,
        eval_gate_games: 16,
        parallel_envs: 1,
        output_dir: out.to_path_buf(),
        scenario: ScenarioConfig::tiny(),
        learner: LearnerConfig {
            gamma: 1.0,
            actor_lr: 0.001,
            ppo_epochs: 4,
            minibatch_size: 1024,
            ..Default::default()
        },
        network: NetConfig {
            hidden: vec![32, 32],
            hyper_hidden: 16,
            head_gain: 0.1,
        },
        ..Default::default()
    }
}

fn score(scenario: &ScenarioConfig, set: Option<PolicySet>, controller: ControllerKind) -> f64 {
    let cfg = EvalConfig {
        mode: EvalMode::Pure,
        controller,
        episodes: SCORE_EPISODES,
        seed: 7_000,
        parallel: 1,
    };
    evaluate(scenario, set, &cfg).unwrap().win_rate
}

/// Least-squares slope of `ys` against their index.
fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        sxy += (i as f64 - mx) * (y - my);
        sxx += (i as f64 - mx).powi(2);
    }
    sxy / sxx
}

fn moving_average(xs: &[f64], w: usize) -> Vec<f64> {
    xs.windows(w).map(|s| s.iter().sum::<f64>() / w as f64).collect()
}

#[test]
fn c7_learning_signal() {
    let t0 = Instant::now();
    let scenario = ScenarioConfig::tiny();
    let control = score(&scenario, None, ControllerKind::Random);
    let mut trained = Vec::new();
    let mut rising = 0;
    let mut lines = Vec::new();
    for seed in LEARNING_SEEDS {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Trainer::new(learning_config(seed, dir.path())).unwrap();
        let mut curve = Vec::new();
        while !t.is_finished() {
            curve.push(t.iterate().unwrap().win_rate);
        }
        let set = PolicySet {
            frontier: &t.state.frontier,
            league: &t.state.league,
        };
        let wr = score(&scenario, Some(set), ControllerKind::Checkpoint);
        let slope = ols_slope(&moving_average(&curve, 5));
        rising += (slope >= 0.0) as usize;
        trained.push(wr);
        lines.push(format!("seed {seed}: {} episodes, win rate {wr:.3}, trend {slope:+.5}", t.state.episodes));
    }
    let mean = trained.iter().sum::<f64>() / trained.len() as f64;
    let lifted = trained.iter().filter(|&&w| w - control >= 0.20).count();
    let secs = t0.elapsed().as_secs_f64();
    let pass = control < 0.10 && mean - control >= 0.20 && rising >= 2 && secs < 1800.0;
    report(
        7,
        "learning signal",
        pass,
        format!(
            "control {control:.3}; {}; mean trained {mean:.3}; seeds 20 points over control {lifted}/3; non-decreasing trend in {rising}/3; {secs:.0}s",
            lines.join("; ")
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 8

#[test]
fn c8_prioritization_effect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        seed: 8,
        episodes_per_iteration: 24,
        p_pure: 0.0,
        parallel_envs: 1,
        output_dir: dir.path().to_path_buf(),
        scenario: ScenarioConfig::tiny(),
        network: NetConfig {
            hidden: vec![16],
            hyper_hidden: 8,
            head_gain: 0.1,
        },
        ..Default::default()
    };
    let mut trainer = Trainer::new(cfg.clone()).unwrap();
    let snapshot = trainer.state.frontier.freeze(1);
    let _ = trainer.state.league.offer(snapshot);
    let episodes = trainer.collect(0).unwrap();
    let trajectories: Vec<AgentTrajectory> = episodes.into_iter().flat_map(|e| e.trajectories).collect();

    let mut lines = Vec::new();
    let mut pass = true;
    for psi in [0.1, 0.5, 0.9] {
        // Type 0 artificially depressed.
        let mut stats = BetaStats::new(3);
        stats.set_cell(1, 0, WinRecord { wins: 1.0, games: 20.0 });
        stats.set_cell(1, 1, WinRecord { wins: 12.0, games: 20.0 });
        stats.set_cell(1, 2, WinRecord { wins: 14.0, games: 20.0 });
        let on = LearnerConfig {
            psi,
            ..Default::default()
        };
        let off = LearnerConfig {
            prioritize: false,
            ..on.clone()
        };
        let with = Batch::build(&trajectories, 3, &stats, &on).unwrap();
        let without = Batch::build(&trajectories, 3, &stats, &off).unwrap();
        let (a, b) = (
            with.mean_abs_weight_for_replaced(0).unwrap(),
            without.mean_abs_weight_for_replaced(0).unwrap(),
        );
        let bound = priority_from_rates(psi, stats.overall_rate().unwrap(), stats.type_rate(0).unwrap());
        let ok = a / b >= 0.9 * bound && bound > 1.0;
        pass &= ok;
        lines.push(format!("psi {psi}: ratio {:.4} vs A_beta {bound:.4}", a / b));
    }
    report(8, "prioritization effect", pass, lines.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------- 9

#[test]
fn c9_frozen_league_purity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        seed: 9,
        iterations: 100,
        episodes_per_iteration: 2,
        league_update_interval: 10,
        league_capacity: 3,
        eval_gate_games: 2,
        parallel_envs: 1,
        output_dir: dir.path().to_path_buf(),
        scenario: ScenarioConfig {
            episode_limit: 50,
            ..ScenarioConfig::tiny()
        },
        learner: LearnerConfig {
            ppo_epochs: 2,
            actor_lr: 0.01,
            critic_lr: 0.01,
            ..Default::default()
        },
        network: NetConfig {
            hidden: vec![8],
            hyper_hidden: 4,
            head_gain: 0.5,
        },
        ..Default::default()
    };
    let mut t = Trainer::new(cfg).unwrap();
    // One member present from the first iteration to the last.
    let id = t.state.next_group_id;
    t.state.next_group_id += 1;
    let (rep, _) = t.state.league.offer(t.state.frontier.freeze(id));
    assert!(rep.retained());
    let frontier_start = t.state.frontier.checksum();

    let mut seen: BTreeMap<GroupId, u64> = BTreeMap::new();
    seen.insert(id, t.state.league.get(id).unwrap().checksum());
    let mut violations = 0;
    let mut admitted = 0;
    while !t.is_finished() {
        let rec = t.iterate().unwrap();
        if let Some(u) = rec.league_update {
            if u.admitted && u.evicted != Some(u.candidate) {
                admitted += 1;
                seen.insert(u.candidate, t.state.league.get(u.candidate).unwrap().checksum());
            }
        }
        for m in t.state.league.members() {
            if seen.get(&m.group_id) != Some(&m.checksum()) || !m.is_frozen() {
                violations += 1;
            }
        }
    }
    let first_kept = t.state.league.get(id).map(|m| m.checksum()) == seen.get(&id).copied();
    let frontier_moved = t.state.frontier.checksum() != frontier_start;
    let pass = violations == 0 && first_kept && frontier_moved;
    report(
        9,
        "frozen league purity",
        pass,
        format!(
            "100 iterations; {admitted} snapshots admitted, {} held at end; initial member intact: {first_kept}; frontier changed: {frontier_moved}; checksum violations {violations}",
            t.state.league.len()
        ),
    );
    assert!(pass);
}
