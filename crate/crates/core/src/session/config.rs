use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::kinematics::{ExercisePose, ExerciseSpec};

/// Numeric rules of the phase detector. Angles in degrees, rates in deg/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseThresholds {
    /// Minimum velocity toward the target to leave Understanding.
    pub v_start: f64,
    /// Minimum displacement from the rest pose to leave Understanding.
    pub d_start: f64,
    /// Velocity magnitude below which the pose counts as stable.
    pub v_hold: f64,
    pub stability_dwell_ms: u32,
    pub start_dwell_ms: u32,
    /// Seconds from rep start before an unfinished reach times out.
    pub reach_timeout: f64,
    pub retrieve_band: f64,
    /// Sample gaps longer than this abort the current rep.
    pub max_gap_ms: u32,
    /// Window at the start of each rep used to capture the rest pose.
    pub rest_capture_ms: u32,
    pub velocity_smoothing_ms: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            v_start: 5.0,
            d_start: 3.0,
            v_hold: 2.0,
            stability_dwell_ms: 500,
            start_dwell_ms: 300,
            reach_timeout: 120.0,
            retrieve_band: 5.0,
            max_gap_ms: 500,
            rest_capture_ms: 1000,
            velocity_smoothing_ms: crate::kinematics::VELOCITY_SMOOTHING_MS,
        }
    }
}

impl PhaseThresholds {
    pub fn reach_timeout_ms(&self) -> u32 {
        (self.reach_timeout * 1000.0).round() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub exercises: Vec<ExerciseSpec>,
    /// Break between poses, seconds.
    pub inter_pose_break: f64,
    /// Break between repetitions of the same pose, seconds.
    pub rep_break: f64,
    pub thresholds: PhaseThresholds,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            exercises: vec![
                ExerciseSpec::new(ExercisePose::StraightLegRaise, 2),
                ExerciseSpec::new(ExercisePose::ProneStraightLegRaise, 2),
                ExerciseSpec::new(ExercisePose::BedSupportedKneeBend, 2),
            ],
            inter_pose_break: 300.0,
            rep_break: 5.0,
            thresholds: PhaseThresholds::default(),
        }
    }
}

fn secs_to_ms(s: f64) -> u32 {
    (s * 1000.0).round() as u32
}

impl SessionConfig {
    pub fn inter_pose_break_ms(&self) -> u32 {
        secs_to_ms(self.inter_pose_break)
    }

    pub fn rep_break_ms(&self) -> u32 {
        secs_to_ms(self.rep_break)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::InvalidConfig(m));
        if self.exercises.is_empty() {
            return bad("at least one exercise is required".into());
        }
        for (i, e) in self.exercises.iter().enumerate() {
            e.validate()
                .map_err(|err| SessionError::InvalidConfig(format!("exercise {i}: {err}")))?;
        }
        let t = &self.thresholds;
        let positive = [
            ("v_start", t.v_start),
            ("d_start", t.d_start),
            ("v_hold", t.v_hold),
            ("reach_timeout", t.reach_timeout),
            ("retrieve_band", t.retrieve_band),
            ("velocity_smoothing_ms", t.velocity_smoothing_ms),
            ("stability_dwell_ms", f64::from(t.stability_dwell_ms)),
            ("start_dwell_ms", f64::from(t.start_dwell_ms)),
            ("max_gap_ms", f64::from(t.max_gap_ms)),
            ("rest_capture_ms", f64::from(t.rest_capture_ms)),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if t.v_hold >= t.v_start {
            return bad(format!("v_hold {} must be below v_start {}", t.v_hold, t.v_start));
        }
        if t.reach_timeout_ms() <= t.rest_capture_ms {
            return bad("reach_timeout must exceed the rest capture window".into());
        }
        if !(self.inter_pose_break >= 0.0 && self.rep_break >= 0.0) {
            return bad("breaks must be non-negative".into());
        }
        Ok(())
    }
}
