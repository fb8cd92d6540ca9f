//! Chat-style init commands applied before an episode starts.

use serde::{Deserialize, Serialize};

use super::items::{is_known_item, Block};
use super::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coord {
    Abs(i32),
    /// Offset from the agent's feet (`~n`).
    Rel(i32),
}

impl Coord {
    fn parse(s: &str) -> Option<Coord> {
        match s.strip_prefix('~') {
            Some("") => Some(Coord::Rel(0)),
            Some(rest) => rest.parse().ok().map(Coord::Rel),
            None => s.parse().ok().map(Coord::Abs),
        }
    }

    fn resolve(self, base: i32) -> i32 {
        match self {
            Coord::Abs(v) => v,
            Coord::Rel(d) => base.saturating_add(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitCommand {
    SetBlock { at: [Coord; 3], block: Block },
    Give { item: String, count: u32 },
    TimeSet(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad init command `{text}`: {reason}")]
pub struct CommandError {
    pub text: String,
    pub reason: String,
}

fn strip_ns(s: &str) -> &str {
    s.strip_prefix("minecraft:").unwrap_or(s)
}

impl InitCommand {
    pub fn parse(text: &str) -> Result<InitCommand, CommandError> {
        let err = |r: &str| CommandError { text: text.to_string(), reason: r.to_string() };
        let body = text.trim().trim_start_matches('/');
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks.as_slice() {
            ["setblock", x, y, z, b] => {
                let c = |s: &str| Coord::parse(s).ok_or_else(|| err("bad coordinate"));
                let block = Block::from_name(strip_ns(b)).ok_or_else(|| err("unknown block"))?;
                Ok(InitCommand::SetBlock { at: [c(x)?, c(y)?, c(z)?], block })
            }
            ["give", rest @ ..] => {
                let rest = match rest {
                    [t, more @ ..] if t.starts_with('@') => more,
                    _ => rest,
                };
                let (item, count) = match rest {
                    [item] => (*item, 1),
                    [item, n] => (*item, n.parse().map_err(|_| err("bad count"))?),
                    _ => return Err(err("expected an item and optional count")),
                };
                let item = strip_ns(item);
                if !is_known_item(item) {
                    return Err(err("unknown item"));
                }
                if count == 0 {
                    return Err(err("count must be positive"));
                }
                Ok(InitCommand::Give { item: item.to_string(), count })
            }
            ["time", "set", t] => {
                let v = match *t {
                    "day" => 1000,
                    "noon" => 6000,
                    "night" => 13000,
                    "midnight" => 18000,
                    n => n.parse().map_err(|_| err("bad time"))?,
                };
                Ok(InitCommand::TimeSet(v))
            }
            _ => Err(err("unsupported command")),
        }
    }

    pub fn apply(&self, world: &mut World) -> Result<(), CommandError> {
        match self {
            InitCommand::SetBlock { at, block } => {
                let p = world.agent.pos;
                let target = [at[0].resolve(p[0]), at[1].resolve(p[1]), at[2].resolve(p[2])];
                if !world.set_block(target, *block) {
                    return Err(CommandError { text: format!("{self:?}"), reason: "out of bounds".into() });
                }
            }
            InitCommand::Give { item, count } => world.add_item(item, *count),
            InitCommand::TimeSet(t) => world.world_time = *t,
        }
        Ok(())
    }
}

/// Parse and apply every command in order, stopping at the first error.
pub fn apply_all(world: &mut World, commands: &[String]) -> Result<(), CommandError> {
    for c in commands {
        InitCommand::parse(c)?.apply(world)?;
    }
    world.mark_attempt();
    Ok(())
}
