use std::io::Write;

use serde::{Deserialize, Serialize};

use super::EpisodeResult;
use crate::model::{FailureReason, PlanSpec};

/// One line of the episode event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    EpisodeStart {
        episode_id: String,
        goal: String,
        seed: u64,
    },
    Plan {
        episode_id: String,
        plan: PlanSpec,
    },
    Skip {
        episode_id: String,
        subgoal_id: String,
    },
    Attempt {
        episode_id: String,
        doc_id: String,
        subgoal_id: String,
        condition: String,
        success: bool,
        reason: Option<FailureReason>,
        steps: u64,
    },
    Commit {
        episode_id: String,
        kind: String,
        id: String,
    },
    EpisodeEnd {
        result: Box<EpisodeResult>,
    },
}

pub trait EventSink {
    fn emit(&mut self, event: Event);
}

impl EventSink for Vec<Event> {
    fn emit(&mut self, event: Event) {
        self.push(event);
    }
}

pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _: Event) {}
}

/// Writes each event as one canonical JSON line. Write errors are counted,
/// not raised, so a full disk cannot abort an episode.
pub struct JsonlSink<W: Write> {
    out: W,
    pub failed_writes: u64,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        JsonlSink { out, failed_writes: 0 }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> EventSink for JsonlSink<W> {
    fn emit(&mut self, event: Event) {
        let line = crate::canon::to_line(&event).expect("events serialize");
        if writeln!(self.out, "{line}").is_err() {
            self.failed_writes += 1;
        }
    }
}
