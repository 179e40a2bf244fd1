//! From sensor orientations to leg angles.
//!
//! World frame convention: Z points up along the bed normal, X points along
//! the leg (hip to foot) when the leg lies flat during calibration. Segment
//! orientations are measured relative to that calibration capture, which
//! removes any fixed sensor mounting rotation.

mod calibration;
mod exercise;
mod orientation;
mod pose;

pub use calibration::{calibrate, CalibrationPose, StillnessTracker, STILLNESS_RATE_DPS, STILLNESS_WINDOW_MS};
pub use exercise::{deviation, ControlledAngle, ExercisePose, ExerciseSpec};
pub use orientation::{
    euler_degrees, quaternion_from_euler_degrees, seed_from_gravity, update_orientation,
    OrientationState, DEFAULT_ALPHA, MAX_DT_MS,
};
pub use pose::{compute_leg_pose, smoothed_velocity, LegPose, VELOCITY_SMOOTHING_MS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("stale sample: timestamp {got} ms does not advance past {last} ms")]
    StaleSample { last: u32, got: u32 },
    #[error("sensors not still long enough for calibration")]
    NotStill,
    #[error("degenerate geometry: {0}")]
    NumericalDegeneracy(&'static str),
    #[error("invalid exercise spec: {0}")]
    InvalidSpec(String),
    #[error("malformed calibration record: {0}")]
    CalibrationFormat(String),
}
