use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};

use super::KinematicsError;
use crate::protocol::SensorId;

/// Angular rate below which a sensor counts as still, deg/s.
pub const STILLNESS_RATE_DPS: f64 = 1.0;
/// How long both sensors must stay still before calibration, ms.
pub const STILLNESS_WINDOW_MS: u32 = 1000;

/// Tracks how long each sensor has been still.
#[derive(Debug, Clone, Default)]
pub struct StillnessTracker {
    still_since: [Option<u32>; 2],
    last: [Option<(u32, UnitQuaternion<f64>)>; 2],
}

impl StillnessTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds a measured angular rate magnitude.
    pub fn observe_rate(&mut self, sensor: SensorId, timestamp_ms: u32, rate_dps: f64) {
        let slot = &mut self.still_since[sensor.index()];
        if rate_dps.abs() < STILLNESS_RATE_DPS {
            slot.get_or_insert(timestamp_ms);
        } else {
            *slot = None;
        }
    }

    /// Feeds an orientation; the rate is taken from the previous one.
    pub fn observe_orientation(&mut self, sensor: SensorId, timestamp_ms: u32, q: UnitQuaternion<f64>) {
        let i = sensor.index();
        match self.last[i] {
            Some((t0, q0)) if timestamp_ms > t0 => {
                let dt = f64::from(timestamp_ms - t0) / 1000.0;
                let rate = q0.angle_to(&q).to_degrees() / dt;
                self.observe_rate(sensor, timestamp_ms, rate);
            }
            Some(_) => {}
            None => self.observe_rate(sensor, timestamp_ms, 0.0),
        }
        self.last[i] = Some((timestamp_ms, q));
    }

    pub fn still_for_ms(&self, sensor: SensorId, now_ms: u32) -> u32 {
        self.still_since[sensor.index()].map_or(0, |t| now_ms.saturating_sub(t))
    }

    pub fn is_still(&self, now_ms: u32) -> bool {
        SensorId::ALL
            .iter()
            .all(|&s| self.still_for_ms(s, now_ms) >= STILLNESS_WINDOW_MS)
    }
}

/// Reference orientations captured with the leg lying flat on the bed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPose {
    pub thigh_ref: UnitQuaternion<f64>,
    pub calf_ref: UnitQuaternion<f64>,
    pub bed_normal: Unit<Vector3<f64>>,
}

/// Captures a calibration. `gravity_estimate` is the world-frame gravity
/// direction; the bed normal is its opposite.
pub fn calibrate(
    thigh_q: UnitQuaternion<f64>,
    calf_q: UnitQuaternion<f64>,
    gravity_estimate: Vector3<f64>,
    stillness: &StillnessTracker,
    now_ms: u32,
) -> Result<CalibrationPose, KinematicsError> {
    if !stillness.is_still(now_ms) {
        return Err(KinematicsError::NotStill);
    }
    let bed_normal = Unit::try_new(-gravity_estimate, 1e-9)
        .ok_or(KinematicsError::NumericalDegeneracy("zero gravity estimate"))?;
    Ok(CalibrationPose {
        thigh_ref: thigh_q,
        calf_ref: calf_q,
        bed_normal,
    })
}

impl CalibrationPose {
    /// Calibration with the sensors' own frames as reference, bed normal +Z.
    pub fn identity() -> Self {
        Self {
            thigh_ref: UnitQuaternion::identity(),
            calf_ref: UnitQuaternion::identity(),
            bed_normal: Vector3::z_axis(),
        }
    }

    /// Leg direction at calibration: world X projected onto the bed plane.
    pub fn leg_axis(&self) -> Vector3<f64> {
        let n = self.bed_normal.into_inner();
        let mut u = Vector3::x() - n * n.x;
        if u.norm() < 1e-6 {
            u = Vector3::y() - n * n.y;
        }
        u.normalize()
    }

    /// Single-line text record, 9 significant digits per value.
    pub fn to_record(&self) -> String {
        let q = |q: &UnitQuaternion<f64>| {
            let q = q.quaternion();
            format!("{:.8e},{:.8e},{:.8e},{:.8e}", q.w, q.i, q.j, q.k)
        };
        let n = self.bed_normal;
        format!(
            "calibration thigh={} calf={} bed_normal={:.8e},{:.8e},{:.8e}",
            q(&self.thigh_ref),
            q(&self.calf_ref),
            n.x,
            n.y,
            n.z
        )
    }

    pub fn from_record(line: &str) -> Result<Self, KinematicsError> {
        let bad = |m: &str| KinematicsError::CalibrationFormat(m.to_string());
        let mut parts = line.split_whitespace();
        if parts.next() != Some("calibration") {
            return Err(bad("missing 'calibration' tag"));
        }
        let mut thigh = None;
        let mut calf = None;
        let mut normal = None;
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| bad(part))?;
            let nums = value
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|_| bad(value)))
                .collect::<Result<Vec<_>, _>>()?;
            match (key, nums.as_slice()) {
                ("thigh", &[w, x, y, z]) => thigh = Some(Quaternion::new(w, x, y, z)),
                ("calf", &[w, x, y, z]) => calf = Some(Quaternion::new(w, x, y, z)),
                ("bed_normal", &[x, y, z]) => normal = Some(Vector3::new(x, y, z)),
                _ => return Err(bad(part)),
            }
        }
        let unit_q = |q: Option<Quaternion<f64>>, what: &str| {
            let q = q.ok_or_else(|| bad(what))?;
            if q.norm() < 1e-6 {
                return Err(bad(what));
            }
            Ok(UnitQuaternion::new_normalize(q))
        };
        let bed_normal = Unit::try_new(normal.ok_or_else(|| bad("bed_normal"))?, 1e-6)
            .ok_or_else(|| bad("bed_normal"))?;
        Ok(Self {
            thigh_ref: unit_q(thigh, "thigh")?,
            calf_ref: unit_q(calf, "calf")?,
            bed_normal,
        })
    }

    /// The calibration as it reads back from its text record. Using this
    /// form live makes replays from a persisted record bit-identical.
    pub fn quantized(&self) -> Self {
        Self::from_record(&self.to_record()).expect("own record parses")
    }
}
