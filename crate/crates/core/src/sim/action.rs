//! Low-level agent actions and their text form.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    North,
    East,
    South,
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    /// Unit offset on the horizontal plane as (dx, dz).
    pub fn offset(self) -> (i32, i32) {
        match self {
            Dir::North => (0, -1),
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
        }
    }

    pub fn from_offset(dx: i32, dz: i32) -> Option<Dir> {
        Dir::ALL.into_iter().find(|d| d.offset() == (dx, dz))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dir::North => "north",
            Dir::East => "east",
            Dir::South => "south",
            Dir::West => "west",
        }
    }

    pub fn parse(s: &str) -> Option<Dir> {
        Dir::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pitch {
    Up,
    Level,
    Down,
}

impl Pitch {
    pub fn dy(self) -> i32 {
        match self {
            Pitch::Up => 1,
            Pitch::Level => 0,
            Pitch::Down => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pitch::Up => "up",
            Pitch::Level => "level",
            Pitch::Down => "down",
        }
    }

    pub fn parse(s: &str) -> Option<Pitch> {
        [Pitch::Up, Pitch::Level, Pitch::Down].into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Move(Dir),
    Jump(Dir),
    Turn(Dir),
    Look(Pitch),
    Mine,
    Place,
    OpenInventory,
    OpenStation,
    CloseGui,
    Craft(String),
    SmeltLoad { input: Option<String>, fuel: Option<String> },
    SmeltCollect,
    Select(u8),
    Use,
    Noop,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad action `{text}`: {reason}")]
pub struct ActionParseError {
    pub text: String,
    pub reason: String,
}

fn opt_item(s: &str) -> Option<String> {
    (s != "-").then(|| s.to_string())
}

impl Action {
    pub fn parse(text: &str) -> Result<Action, ActionParseError> {
        let err = |reason: &str| ActionParseError { text: text.to_string(), reason: reason.to_string() };
        let toks: Vec<&str> = text.split_whitespace().collect();
        let dir = |i: usize| toks.get(i).and_then(|t| Dir::parse(t)).ok_or_else(|| err("expected a direction"));
        let arity = |n: usize| if toks.len() == n { Ok(()) } else { Err(err("wrong number of arguments")) };
        let Some(head) = toks.first() else {
            return Err(err("empty"));
        };
        let action = match *head {
            "move" => {
                arity(2)?;
                Action::Move(dir(1)?)
            }
            "jump" => {
                arity(2)?;
                Action::Jump(dir(1)?)
            }
            "turn" => {
                arity(2)?;
                Action::Turn(dir(1)?)
            }
            "look" => {
                arity(2)?;
                Action::Look(Pitch::parse(toks[1]).ok_or_else(|| err("expected up, level or down"))?)
            }
            "mine" => {
                arity(1)?;
                Action::Mine
            }
            "place" => {
                arity(1)?;
                Action::Place
            }
            "open" => {
                arity(2)?;
                match toks[1] {
                    "inventory" => Action::OpenInventory,
                    "station" => Action::OpenStation,
                    _ => return Err(err("expected inventory or station")),
                }
            }
            "close" => {
                arity(1)?;
                Action::CloseGui
            }
            "craft" => {
                arity(2)?;
                Action::Craft(toks[1].to_string())
            }
            "smelt-load" => {
                if !(2..=3).contains(&toks.len()) {
                    return Err(err("wrong number of arguments"));
                }
                let input = opt_item(toks[1]);
                let fuel = toks.get(2).and_then(|f| opt_item(f));
                if input.is_none() && fuel.is_none() {
                    return Err(err("nothing to load"));
                }
                Action::SmeltLoad { input, fuel }
            }
            "smelt-collect" => {
                arity(1)?;
                Action::SmeltCollect
            }
            "select" => {
                arity(2)?;
                Action::Select(toks[1].parse().map_err(|_| err("slot must be a number"))?)
            }
            "use" => {
                arity(1)?;
                Action::Use
            }
            "noop" => {
                arity(1)?;
                Action::Noop
            }
            _ => return Err(err("unknown verb")),
        };
        Ok(action)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move(d) => write!(f, "move {}", d.as_str()),
            Action::Jump(d) => write!(f, "jump {}", d.as_str()),
            Action::Turn(d) => write!(f, "turn {}", d.as_str()),
            Action::Look(p) => write!(f, "look {}", p.as_str()),
            Action::Mine => f.write_str("mine"),
            Action::Place => f.write_str("place"),
            Action::OpenInventory => f.write_str("open inventory"),
            Action::OpenStation => f.write_str("open station"),
            Action::CloseGui => f.write_str("close"),
            Action::Craft(id) => write!(f, "craft {id}"),
            Action::SmeltLoad { input, fuel } => {
                let i = input.as_deref().unwrap_or("-");
                match fuel {
                    Some(fu) => write!(f, "smelt-load {i} {fu}"),
                    None => write!(f, "smelt-load {i}"),
                }
            }
            Action::SmeltCollect => f.write_str("smelt-collect"),
            Action::Select(n) => write!(f, "select {n}"),
            Action::Use => f.write_str("use"),
            Action::Noop => f.write_str("noop"),
        }
    }
}
