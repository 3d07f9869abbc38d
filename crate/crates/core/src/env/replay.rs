//! Line-delimited JSON replay: one line per tick with each agent's state
//! and submitted action, then a final line with the terminal outcome.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::env::arena::{Arena, EpisodeOutcome};
use crate::env::types::{Action, AgentType, Team};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRecord {
    pub id: usize,
    pub team: Team,
    #[serde(rename = "type")]
    pub kind: AgentType,
    pub x: f64,
    pub y: f64,
    pub health: f64,
    /// `None` for dead agents and on the terminal line.
    pub action: Option<Action>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayLine {
    pub tick: u32,
    pub agents: Vec<AgentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<EpisodeOutcome>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Replay {
    pub lines: Vec<ReplayLine>,
}

fn snapshot(arena: &Arena, actions: Option<&[Action]>) -> Vec<AgentRecord> {
    arena
        .state()
        .agents
        .iter()
        .map(|a| AgentRecord {
            id: a.id,
            team: a.team,
            kind: a.kind,
            x: a.pos[0],
            y: a.pos[1],
            health: a.health,
            action: actions.filter(|_| a.alive).map(|acts| acts[a.id]),
        })
        .collect()
}

impl Replay {
    /// Records the pre-step state together with the joint action about to be applied.
    pub fn record_step(&mut self, arena: &Arena, actions: &[Action]) {
        self.lines.push(ReplayLine {
            tick: arena.state().tick,
            agents: snapshot(arena, Some(actions)),
            outcome: None,
        });
    }

    /// Records the final state; call once the arena reports done.
    pub fn record_end(&mut self, arena: &Arena) {
        self.lines.push(ReplayLine {
            tick: arena.state().tick,
            agents: snapshot(arena, None),
            outcome: arena.outcome().cloned(),
        });
    }

    pub fn outcome(&self) -> Option<&EpisodeOutcome> {
        self.lines.last().and_then(|l| l.outcome.as_ref())
    }

    /// Number of simulated ticks.
    pub fn ticks(&self) -> usize {
        self.lines.iter().filter(|l| l.outcome.is_none()).count()
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for l in &self.lines {
            serde_json::to_writer(&mut out, l)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read(input: impl BufRead) -> Result<Self> {
        let mut lines = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Format {
                what: "replay",
                detail: format!("line {}: {e}", n + 1),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ReplayLine = serde_json::from_str(&line).map_err(|e| Error::Format {
                what: "replay",
                detail: format!("line {}: {e}", n + 1),
            })?;
            lines.push(rec);
        }
        let replay = Self { lines };
        replay.validate()?;
        Ok(replay)
    }

    fn validate(&self) -> Result<()> {
        let bad = |d: String| Error::Format { what: "replay", detail: d };
        let Some((last, body)) = self.lines.split_last() else {
            return Err(bad("empty replay".into()));
        };
        if last.outcome.is_none() {
            return Err(bad("missing terminal outcome line".into()));
        }
        for (i, l) in body.iter().enumerate() {
            if l.outcome.is_some() {
                return Err(bad(format!("outcome on non-terminal line {}", i + 1)));
            }
            if l.tick as usize != i {
                return Err(bad(format!("line {} has tick {}", i + 1, l.tick)));
            }
        }
        Ok(())
    }
}
