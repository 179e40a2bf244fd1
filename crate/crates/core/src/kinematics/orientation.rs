use nalgebra::{UnitQuaternion, Vector3};

use super::KinematicsError;
use crate::protocol::ImuFrameRaw;

pub const DEFAULT_ALPHA: f64 = 0.98;

/// Larger sample gaps re-seed the filter from the accelerometer.
pub const MAX_DT_MS: u32 = 100;

/// Accelerometer magnitudes below this (in g) carry no usable tilt reference.
const MIN_GRAVITY_G: f64 = 0.1;

/// Complementary attitude filter for one sensor.
///
/// Gyro rates are integrated in the body frame; afterwards the estimate is
/// rotated a fraction `1 - alpha` of the way toward agreement with the
/// measured gravity direction. That correction has no component about the
/// vertical, so yaw is gyro-only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationState {
    pub orientation: UnitQuaternion<f64>,
    pub alpha: f64,
    pub last_timestamp_ms: Option<u32>,
}

impl OrientationState {
    /// An unseeded filter; the first sample seeds it from gravity.
    pub fn new(alpha: f64) -> Self {
        Self {
            orientation: UnitQuaternion::identity(),
            alpha,
            last_timestamp_ms: None,
        }
    }

    pub fn with_orientation(orientation: UnitQuaternion<f64>, alpha: f64, timestamp_ms: u32) -> Self {
        Self {
            orientation,
            alpha,
            last_timestamp_ms: Some(timestamp_ms),
        }
    }

    pub fn update(&mut self, raw: &ImuFrameRaw) -> Result<(), KinematicsError> {
        let t = raw.timestamp_ms;
        let gravity = Vector3::from(raw.accel_g());
        let last = match self.last_timestamp_ms {
            None => {
                self.reseed(gravity, t);
                return Ok(());
            }
            Some(last) => last,
        };
        if t <= last {
            return Err(KinematicsError::StaleSample { last, got: t });
        }
        let dt_ms = t - last;
        if dt_ms > MAX_DT_MS {
            self.reseed(gravity, t);
            return Ok(());
        }
        let dt = f64::from(dt_ms) / 1000.0;
        let rate = Vector3::from(raw.gyro_dps()).map(f64::to_radians);
        let mut q = self.orientation * UnitQuaternion::from_scaled_axis(rate * dt);

        let g_norm = gravity.norm();
        if self.alpha < 1.0 && g_norm > MIN_GRAVITY_G {
            let predicted_down = q * (gravity / g_norm);
            let down = -Vector3::z();
            let correction = match UnitQuaternion::rotation_between(&predicted_down, &down) {
                Some(c) => c.scaled_axis(),
                // Exactly upside down: any horizontal axis works.
                None => Vector3::x() * std::f64::consts::PI,
            };
            q = UnitQuaternion::from_scaled_axis(correction * (1.0 - self.alpha)) * q;
        }
        self.orientation = UnitQuaternion::new_normalize(q.into_inner());
        self.last_timestamp_ms = Some(t);
        Ok(())
    }

    fn reseed(&mut self, gravity: Vector3<f64>, t: u32) {
        if let Some(q) = seed_from_gravity(gravity) {
            self.orientation = q;
        }
        self.last_timestamp_ms = Some(t);
    }

    /// (roll, pitch, yaw) in degrees.
    pub fn euler_degrees(&self) -> (f64, f64, f64) {
        euler_degrees(&self.orientation)
    }
}

/// Functional form of [`OrientationState::update`].
pub fn update_orientation(
    state: &OrientationState,
    raw: &ImuFrameRaw,
) -> Result<OrientationState, KinematicsError> {
    let mut next = *state;
    next.update(raw)?;
    Ok(next)
}

/// Zero-yaw orientation whose body frame sees `gravity` (gravity direction,
/// any magnitude) as world down.
pub fn seed_from_gravity(gravity: Vector3<f64>) -> Option<UnitQuaternion<f64>> {
    let n = gravity.norm();
    if n <= MIN_GRAVITY_G || !n.is_finite() {
        return None;
    }
    let g = gravity / n;
    let roll = (-g.y).atan2(-g.z);
    let pitch = g.x.atan2((g.y * g.y + g.z * g.z).sqrt());
    Some(UnitQuaternion::from_euler_angles(roll, pitch, 0.0))
}

pub fn euler_degrees(q: &UnitQuaternion<f64>) -> (f64, f64, f64) {
    let (r, p, y) = q.euler_angles();
    (r.to_degrees(), p.to_degrees(), y.to_degrees())
}

pub fn quaternion_from_euler_degrees(roll: f64, pitch: f64, yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
}
