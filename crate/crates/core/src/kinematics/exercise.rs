use serde::{Deserialize, Serialize};

use super::{KinematicsError, LegPose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExercisePose {
    StraightLegRaise,
    ProneStraightLegRaise,
    BedSupportedKneeBend,
    KneeExtension,
}

impl ExercisePose {
    pub const ALL: [ExercisePose; 4] = [
        ExercisePose::StraightLegRaise,
        ExercisePose::ProneStraightLegRaise,
        ExercisePose::BedSupportedKneeBend,
        ExercisePose::KneeExtension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExercisePose::StraightLegRaise => "straight_leg_raise",
            ExercisePose::ProneStraightLegRaise => "prone_straight_leg_raise",
            ExercisePose::BedSupportedKneeBend => "bed_supported_knee_bend",
            ExercisePose::KneeExtension => "knee_extension",
        }
    }

    pub fn default_controlled_angle(self) -> ControlledAngle {
        match self {
            ExercisePose::StraightLegRaise => ControlledAngle::CalfElevation,
            // Prone: the thigh lifts off the bed, evaluated against the same normal.
            ExercisePose::ProneStraightLegRaise => ControlledAngle::ThighElevation,
            ExercisePose::BedSupportedKneeBend => ControlledAngle::KneeBend,
            ExercisePose::KneeExtension => ControlledAngle::KneeFlexion,
        }
    }

    /// Prescribed target angle of the controlled quantity.
    pub fn default_target(self) -> f64 {
        match self {
            ExercisePose::StraightLegRaise | ExercisePose::ProneStraightLegRaise => 30.0,
            ExercisePose::BedSupportedKneeBend => 90.0,
            ExercisePose::KneeExtension => 180.0,
        }
    }
}

/// Which [`LegPose`] quantity an exercise is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlledAngle {
    KneeFlexion,
    /// `180 - knee_flexion`: zero for a straight leg.
    KneeBend,
    ThighElevation,
    CalfElevation,
}

impl ControlledAngle {
    pub fn read(self, pose: &LegPose) -> f64 {
        match self {
            ControlledAngle::KneeFlexion => pose.knee_flexion,
            ControlledAngle::KneeBend => 180.0 - pose.knee_flexion,
            ControlledAngle::ThighElevation => pose.thigh_elevation,
            ControlledAngle::CalfElevation => pose.calf_elevation,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ControlledAngle::KneeFlexion => "knee_flexion",
            ControlledAngle::KneeBend => "knee_bend",
            ControlledAngle::ThighElevation => "thigh_elevation",
            ControlledAngle::CalfElevation => "calf_elevation",
        }
    }
}

fn default_enter_band() -> f64 {
    5.0
}
fn default_hold_band() -> f64 {
    2.0
}
fn default_hold_duration() -> f64 {
    10.0
}
fn default_repetitions() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseSpec {
    pub pose: ExercisePose,
    /// Defaults to the pose's natural quantity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controlled_angle: Option<ControlledAngle>,
    pub target: f64,
    #[serde(default = "default_enter_band")]
    pub enter_band: f64,
    #[serde(default = "default_hold_band")]
    pub hold_band: f64,
    /// Seconds.
    #[serde(default = "default_hold_duration")]
    pub hold_duration: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
}

impl ExerciseSpec {
    pub fn new(pose: ExercisePose, repetitions: u32) -> Self {
        Self {
            pose,
            controlled_angle: None,
            target: pose.default_target(),
            enter_band: default_enter_band(),
            hold_band: default_hold_band(),
            hold_duration: default_hold_duration(),
            repetitions,
        }
    }

    pub fn controlled(&self) -> ControlledAngle {
        self.controlled_angle
            .unwrap_or_else(|| self.pose.default_controlled_angle())
    }

    pub fn hold_duration_ms(&self) -> u32 {
        (self.hold_duration * 1000.0).round() as u32
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |m: String| Err(KinematicsError::InvalidSpec(m));
        if !(self.target > 0.0 && self.target <= 180.0) {
            return bad(format!("target {} outside (0, 180]", self.target));
        }
        if !(self.hold_band > 0.0 && self.enter_band > 0.0) {
            return bad("bands must be positive".into());
        }
        if self.hold_band > self.enter_band {
            return bad(format!(
                "hold_band {} exceeds enter_band {}",
                self.hold_band, self.enter_band
            ));
        }
        if !(self.hold_duration > 0.0) || self.hold_duration_ms() == 0 {
            return bad("hold_duration must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        Ok(())
    }
}

/// Signed deviation of the controlled angle from target: negative means
/// short of the target, positive means past it.
pub fn deviation(pose: &LegPose, spec: &ExerciseSpec) -> f64 {
    spec.controlled().read(pose) - spec.target
}
