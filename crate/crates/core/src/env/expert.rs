//! Centralized full-observation expert controller.
//!
//! Every living drone leads an attack group; the other living agents are
//! dealt round-robin (by id) into the groups. A group scores each living
//! enemy by `damage * health_fraction / (1 + distance to group centroid)`
//! and goes after the highest score, lowest id on ties. Drones repair when
//! an ally in reach is below [`REPAIR_THRESHOLD`] of its health, otherwise
//! they stay with their group. Without drones the whole team is one
//! leaderless group.

use crate::env::arena::{AgentState, Arena};
use crate::env::types::{Action, AgentType, Team};
use crate::error::{Error, Result};

pub const REPAIR_THRESHOLD: f64 = 0.7;
/// Distance a drone keeps to the centre of its followers.
const ESCORT_RADIUS: f64 = 2.0;

struct Group {
    leader: Option<usize>,
    members: Vec<usize>,
}

/// Actions for every agent id (dead agents and the other team get `Hold`).
pub fn scripted_expert(arena: &Arena, team: Team) -> Result<Vec<Action>> {
    let agents = &arena.state().agents;
    let mine: Vec<&AgentState> = agents.iter().filter(|a| a.alive && a.team == team).collect();
    if mine.is_empty() {
        return Err(Error::Contract(format!("team {team:?} has no living agent")));
    }
    let mut actions = vec![Action::Hold; agents.len()];
    for g in form_groups(&mine) {
        let all: Vec<usize> = g.leader.iter().copied().chain(g.members.iter().copied()).collect();
        let centroid = centroid(agents, &all);
        let Some(target) = max_threat(arena, team, centroid, None) else {
            continue;
        };
        for &m in &g.members {
            actions[m] = member_action(arena, m, target)?;
        }
        if let Some(d) = g.leader {
            actions[d] = drone_action(arena, d, &g.members, target)?;
        }
    }
    Ok(actions)
}

fn form_groups(mine: &[&AgentState]) -> Vec<Group> {
    let drones: Vec<usize> = mine.iter().filter(|a| a.kind == AgentType::Drone).map(|a| a.id).collect();
    let others: Vec<usize> = mine.iter().filter(|a| a.kind != AgentType::Drone).map(|a| a.id).collect();
    if drones.is_empty() {
        return vec![Group {
            leader: None,
            members: others,
        }];
    }
    let mut groups: Vec<Group> = drones
        .iter()
        .map(|&d| Group {
            leader: Some(d),
            members: Vec::new(),
        })
        .collect();
    let k = groups.len();
    for (i, id) in others.into_iter().enumerate() {
        groups[i % k].members.push(id);
    }
    groups
}

fn centroid(agents: &[AgentState], ids: &[usize]) -> [f64; 2] {
    let n = ids.len().max(1) as f64;
    let (sx, sy) = ids
        .iter()
        .fold((0.0, 0.0), |(x, y), &i| (x + agents[i].pos[0], y + agents[i].pos[1]));
    [sx / n, sy / n]
}

/// Highest-threat living enemy, optionally restricted to what `attacker` may hit.
fn max_threat(arena: &Arena, team: Team, centre: [f64; 2], attacker: Option<AgentType>) -> Option<usize> {
    let tab = arena.abilities();
    let mut best: Option<(f64, usize)> = None;
    for e in arena.state().agents.iter().filter(|e| e.alive && e.team != team) {
        if let Some(k) = attacker {
            if !tab.get(k).can_target(e.kind) {
                continue;
            }
        }
        let spec = tab.get(e.kind);
        let d = (e.pos[0] - centre[0]).hypot(e.pos[1] - centre[1]);
        let threat = spec.attack_damage * (e.health / spec.max_health) / (1.0 + d);
        // Ids are visited in increasing order, so strict `>` keeps the lowest id on ties.
        if best.map_or(true, |(b, _)| threat > b) {
            best = Some((threat, e.id));
        }
    }
    best.map(|(_, id)| id)
}

/// Engage `target` if it occupies one of the agent's engage slots, otherwise
/// step toward it.
fn pursue(arena: &Arena, agent: usize, target: usize) -> Action {
    if let Some(k) = arena.engage_targets(agent).iter().position(|&t| t == target) {
        return Action::Engage(k as u8);
    }
    let agents = &arena.state().agents;
    move_toward(agents[agent].team, agents[agent].pos, agents[target].pos)
}

fn move_toward(team: Team, from: [f64; 2], to: [f64; 2]) -> Action {
    let v = Arena::to_team_frame(team, [to[0] - from[0], to[1] - from[1]]);
    if v[0] == 0.0 && v[1] == 0.0 {
        return Action::Hold;
    }
    let best = (0..8u8)
        .max_by(|&a, &b| {
            let (da, db) = (Action::direction(a), Action::direction(b));
            let sa = da[0] * v[0] + da[1] * v[1];
            let sb = db[0] * v[0] + db[1] * v[1];
            // Reverse on ties so `max_by` keeps the lowest direction index.
            sa.total_cmp(&sb).then(b.cmp(&a))
        })
        .expect("eight directions");
    Action::Move(best)
}

fn member_action(arena: &Arena, agent: usize, group_target: usize) -> Result<Action> {
    let me = &arena.state().agents[agent];
    let tab = arena.abilities();
    let target = if tab.get(me.kind).can_target(arena.state().agents[group_target].kind) {
        Some(group_target)
    } else {
        max_threat(arena, me.team, me.pos, Some(me.kind))
    };
    Ok(match target {
        Some(t) => pursue(arena, agent, t),
        None => Action::Hold,
    })
}

fn drone_action(arena: &Arena, drone: usize, followers: &[usize], target: usize) -> Result<Action> {
    let agents = &arena.state().agents;
    let me = &agents[drone];
    let tab = arena.abilities();
    let reach = tab.get(me.kind).repair_range;
    let needs_repair = agents.iter().any(|a| {
        a.alive
            && a.team == me.team
            && a.id != drone
            && a.health < REPAIR_THRESHOLD * tab.get(a.kind).max_health
            && (a.pos[0] - me.pos[0]).hypot(a.pos[1] - me.pos[1]) <= reach
    });
    if needs_repair && arena.action_mask(drone)?[Action::Repair.index()] {
        return Ok(Action::Repair);
    }
    if followers.is_empty() {
        return Ok(pursue(arena, drone, target));
    }
    let c = centroid(agents, followers);
    if (c[0] - me.pos[0]).hypot(c[1] - me.pos[1]) > ESCORT_RADIUS {
        return Ok(move_toward(me.team, me.pos, c));
    }
    match arena.engage_targets(drone).iter().position(|&t| t == target) {
        Some(k) => Ok(Action::Engage(k as u8)),
        None => Ok(Action::Hold),
    }
}
