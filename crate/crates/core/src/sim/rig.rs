//! Maps a controlled angle to segment orientations for each exercise posture.
//!
//! World frame: Z is the bed normal, X runs along the leg toward the foot as
//! it lies flat at calibration.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::kinematics::{euler_degrees, quaternion_from_euler_degrees, ExercisePose};
use crate::protocol::{ImuFrameFiltered, ProtocolError, SensorId, FLAG_CALIBRATED};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigConfig {
    /// Sensor mounting offsets as roll, pitch, yaw in degrees.
    pub thigh_mount: [f64; 3],
    pub calf_mount: [f64; 3],
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            thigh_mount: [4.0, -3.0, 20.0],
            calf_mount: [-6.0, 2.0, -15.0],
        }
    }
}

/// Controlled angle of the resting posture for each exercise.
pub fn rest_angle(pose: ExercisePose) -> f64 {
    match pose {
        ExercisePose::KneeExtension => 90.0,
        _ => 0.0,
    }
}

fn ry(deg: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), deg.to_radians())
}

/// Thigh and calf rotations from the flat calibration posture. `None` is the
/// supine calibration posture itself.
pub fn segment_rotations(pose: Option<ExercisePose>, angle: f64) -> (UnitQuaternion<f64>, UnitQuaternion<f64>) {
    match pose {
        None => (UnitQuaternion::identity(), UnitQuaternion::identity()),
        Some(ExercisePose::StraightLegRaise) => (ry(-angle), ry(-angle)),
        Some(ExercisePose::ProneStraightLegRaise) => {
            let q = ry(-angle) * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI);
            (q, q)
        }
        Some(ExercisePose::BedSupportedKneeBend) => (ry(-angle / 2.0), ry(angle / 2.0)),
        Some(ExercisePose::KneeExtension) => (UnitQuaternion::identity(), ry(180.0 - angle)),
    }
}

impl RigConfig {
    fn mount(&self, sensor: SensorId) -> UnitQuaternion<f64> {
        let m = match sensor {
            SensorId::Thigh => self.thigh_mount,
            SensorId::Calf => self.calf_mount,
        };
        quaternion_from_euler_degrees(m[0], m[1], m[2])
    }

    /// Filtered frames both sensors report for the given posture.
    pub fn frames(
        &self,
        pose: Option<ExercisePose>,
        angle: f64,
        timestamp_ms: u32,
    ) -> Result<[ImuFrameFiltered; 2], ProtocolError> {
        let (thigh, calf) = segment_rotations(pose, angle);
        let frame = |sensor: SensorId, seg: UnitQuaternion<f64>| {
            let (r, p, y) = euler_degrees(&(seg * self.mount(sensor)));
            ImuFrameFiltered::from_degrees(sensor, timestamp_ms, r, p, y, FLAG_CALIBRATED)
        };
        Ok([frame(SensorId::Thigh, thigh)?, frame(SensorId::Calf, calf)?])
    }
}
