//! Per-repetition phase segmentation, rep counting and hold timing.

mod config;
mod engine;

pub use config::{PhaseThresholds, SessionConfig};
pub use engine::{median, Engine, SessionProgress, StepOutput};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::LegPose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementPhase {
    Understanding,
    Reaching,
    FineTuning,
    Holding,
    Retrieving,
    Rest,
}

impl MovementPhase {
    pub fn name(self) -> &'static str {
        match self {
            MovementPhase::Understanding => "understanding",
            MovementPhase::Reaching => "reaching",
            MovementPhase::FineTuning => "fine_tuning",
            MovementPhase::Holding => "holding",
            MovementPhase::Retrieving => "retrieving",
            MovementPhase::Rest => "rest",
        }
    }

    /// Position within a repetition; `Rest` sits outside reps.
    pub fn order(self) -> Option<u8> {
        match self {
            MovementPhase::Understanding => Some(0),
            MovementPhase::Reaching => Some(1),
            MovementPhase::FineTuning => Some(2),
            MovementPhase::Holding => Some(3),
            MovementPhase::Retrieving => Some(4),
            MovementPhase::Rest => None,
        }
    }
}

/// A finished phase interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEvent {
    pub phase: MovementPhase,
    pub start_ts: u32,
    pub end_ts: u32,
    pub entry_pose: LegPose,
}

impl PhaseEvent {
    pub fn duration_ms(&self) -> u32 {
        self.end_ts - self.start_ts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepOutcome {
    Completed,
    TimedOut,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldSample {
    pub timestamp_ms: u32,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub exercise_index: usize,
    pub rep_index: u32,
    pub events: Vec<PhaseEvent>,
    /// Median controlled angle over the rest-capture window.
    pub rest_angle: Option<f64>,
    pub hold_start_angle: Option<f64>,
    pub countdown_completed: bool,
    pub outcome: RepOutcome,
    /// Controlled-angle samples inside the hold window.
    pub hold_trace: Vec<HoldSample>,
}

impl RepRecord {
    pub fn phase(&self, phase: MovementPhase) -> Option<&PhaseEvent> {
        self.events.iter().find(|e| e.phase == phase)
    }

    pub fn start_ts(&self) -> Option<u32> {
        self.events.first().map(|e| e.start_ts)
    }

    pub fn end_ts(&self) -> Option<u32> {
        self.events.last().map(|e| e.end_ts)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("out-of-order sample: {got} ms after {last} ms")]
    OutOfOrderSample { last: u32, got: u32 },
    #[error("session already complete")]
    SessionComplete,
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
}
