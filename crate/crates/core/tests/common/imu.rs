//! Synthetic inertial data for a rigid body following a smooth 6-DoF path.

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rehab_core::protocol::{ImuFrameRaw, SensorId};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy)]
pub struct ImuNoise {
    pub gyro_bias_dps: f64,
    pub gyro_rms_dps: f64,
    pub accel_rms_mg: f64,
}

impl ImuNoise {
    pub const NONE: ImuNoise = ImuNoise {
        gyro_bias_dps: 0.0,
        gyro_rms_dps: 0.0,
        accel_rms_mg: 0.0,
    };
}

/// Sum of two sinusoids per degree of freedom with random phases.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// (amplitude, frequency Hz, phase) per term, for roll, pitch, yaw.
    angles: [[(f64, f64, f64); 2]; 3],
    /// Translation terms in metres, per world axis.
    position: [(f64, f64, f64); 3],
}

impl Trajectory {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut term = |amp: f64, lo: f64, hi: f64| (amp, rng.random_range(lo..hi), rng.random_range(0.0..TAU));
        let angles = [
            [term(40.0, 0.05, 0.15), term(15.0, 0.3, 0.6)],
            [term(35.0, 0.05, 0.15), term(12.0, 0.3, 0.6)],
            [term(90.0, 0.02, 0.08), term(20.0, 0.2, 0.4)],
        ];
        let position = [term(0.15, 0.05, 0.2), term(0.1, 0.05, 0.2), term(0.05, 0.05, 0.2)];
        Self { angles, position }
    }

    /// Roll, pitch, yaw in degrees at time `t` seconds.
    pub fn euler(&self, t: f64) -> (f64, f64, f64) {
        let eval = |terms: &[(f64, f64, f64); 2]| terms.iter().map(|(a, f, p)| a * (TAU * f * t + p).sin()).sum::<f64>();
        (eval(&self.angles[0]), eval(&self.angles[1]), eval(&self.angles[2]))
    }

    pub fn orientation(&self, t: f64) -> UnitQuaternion<f64> {
        let (r, p, y) = self.euler(t);
        UnitQuaternion::from_euler_angles(r.to_radians(), p.to_radians(), y.to_radians())
    }

    /// World-frame linear acceleration in m/s^2.
    pub fn acceleration(&self, t: f64) -> Vector3<f64> {
        let a = |&(amp, f, p): &(f64, f64, f64)| -amp * (TAU * f).powi(2) * (TAU * f * t + p).sin();
        Vector3::new(a(&self.position[0]), a(&self.position[1]), a(&self.position[2]))
    }
}

/// Samples the trajectory at `dt_ms` for `n` samples. The gyro reading at a
/// sample is the mean body rate over the preceding interval; the
/// accelerometer reports the gravity direction minus linear acceleration,
/// both in the body frame.
pub fn sample_imu(
    traj: &Trajectory,
    sensor: SensorId,
    dt_ms: u32,
    n: usize,
    noise: ImuNoise,
    rng: &mut ChaCha8Rng,
) -> Vec<(ImuFrameRaw, UnitQuaternion<f64>)> {
    let gyro_n = Normal::new(0.0, noise.gyro_rms_dps.max(1e-12)).unwrap();
    let accel_n = Normal::new(0.0, noise.accel_rms_mg.max(1e-12)).unwrap();
    let dt = f64::from(dt_ms) / 1000.0;
    let mut prev = traj.orientation(0.0);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let q = traj.orientation(t);
        let rate = if k == 0 {
            Vector3::zeros()
        } else {
            (prev.inverse() * q).scaled_axis() / dt
        };
        prev = q;
        let specific = -Vector3::z() - traj.acceleration(t) / 9.80665;
        let body = q.inverse() * specific;
        let mut gyro = [0.0; 3];
        let mut accel = [0.0; 3];
        for i in 0..3 {
            gyro[i] = rate[i].to_degrees() + noise.gyro_bias_dps + gyro_n.sample(rng);
            accel[i] = body[i] * 1000.0 + accel_n.sample(rng);
        }
        let frame = ImuFrameRaw::from_physical(sensor, k as u32 * dt_ms, gyro, accel).unwrap();
        out.push((frame, q));
    }
    out
}

/// Signed difference of two angles in degrees, wrapped to [-180, 180).
pub fn angle_diff(a: f64, b: f64) -> f64 {
    (a - b + 180.0).rem_euclid(360.0) - 180.0
}
