use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{CalibrationPose, KinematicsError};

/// Time constant of the exponential velocity smoother, ms.
pub const VELOCITY_SMOOTHING_MS: f64 = 50.0;

/// Joint state derived from the two segment orientations. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegPose {
    pub timestamp_ms: u32,
    /// Angle between thigh and calf; 180 is a straight leg.
    pub knee_flexion: f64,
    /// Signed angle of the hip-to-knee axis above the bed plane.
    pub thigh_elevation: f64,
    /// Signed angle of the knee-to-ankle axis above the bed plane.
    pub calf_elevation: f64,
    /// Smoothed rate of change of `knee_flexion`, deg/s.
    pub knee_angular_velocity: f64,
}

impl LegPose {
    pub fn flat(timestamp_ms: u32) -> Self {
        Self {
            timestamp_ms,
            knee_flexion: 180.0,
            thigh_elevation: 0.0,
            calf_elevation: 0.0,
            knee_angular_velocity: 0.0,
        }
    }
}

/// Exponentially smoothed finite-difference rate.
///
/// Returns `prev_rate` unchanged when no time has elapsed.
pub fn smoothed_velocity(
    prev_value: f64,
    prev_rate: f64,
    prev_ms: u32,
    value: f64,
    now_ms: u32,
    tau_ms: f64,
) -> f64 {
    if now_ms <= prev_ms {
        return prev_rate;
    }
    let dt_ms = f64::from(now_ms - prev_ms);
    let raw = (value - prev_value) / (dt_ms / 1000.0);
    let gain = 1.0 - (-dt_ms / tau_ms).exp();
    prev_rate + gain * (raw - prev_rate)
}

/// Angle between two vectors in degrees, robust near 0 and 180.
fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

pub fn compute_leg_pose(
    cal: &CalibrationPose,
    thigh_q: &UnitQuaternion<f64>,
    calf_q: &UnitQuaternion<f64>,
    timestamp_ms: u32,
    prev: Option<&LegPose>,
) -> Result<LegPose, KinematicsError> {
    let leg = cal.leg_axis();
    let normal = cal.bed_normal.into_inner();
    // Segment rotation since calibration, expressed in the world frame.
    let thigh_axis = (thigh_q * cal.thigh_ref.inverse()) * leg;
    let calf_axis = (calf_q * cal.calf_ref.inverse()) * leg;
    if thigh_axis.norm() < 1e-9 || calf_axis.norm() < 1e-9 {
        return Err(KinematicsError::NumericalDegeneracy("segment axis has zero length"));
    }
    if !thigh_axis.iter().chain(calf_axis.iter()).all(|v| v.is_finite()) {
        return Err(KinematicsError::NumericalDegeneracy("non-finite segment axis"));
    }
    let thigh_axis = thigh_axis.normalize();
    let calf_axis = calf_axis.normalize();

    let knee_flexion = angle_between(&-thigh_axis, &calf_axis);
    let elevation = |axis: &Vector3<f64>| 90.0 - angle_between(axis, &normal);
    let knee_angular_velocity = match prev {
        Some(p) => smoothed_velocity(
            p.knee_flexion,
            p.knee_angular_velocity,
            p.timestamp_ms,
            knee_flexion,
            timestamp_ms,
            VELOCITY_SMOOTHING_MS,
        ),
        None => 0.0,
    };
    Ok(LegPose {
        timestamp_ms,
        knee_flexion,
        thigh_elevation: elevation(&thigh_axis),
        calf_elevation: elevation(&calf_axis),
        knee_angular_velocity,
    })
}
