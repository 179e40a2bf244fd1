//! Wire formats for the IMU ingest link and the haptic command link.
//!
//! All multi-byte fields are little-endian. Every frame starts with a two
//! byte sync word and ends with an XOR checksum over everything between the
//! sync word and the checksum byte.
//!
//! ```text
//! filtered IMU (16 bytes)
//!   0  1   2      3..7        7..9  9..11  11..13  13     14    15
//!  A5 5A  sensor  timestamp   roll  pitch  yaw     flags  0x00  xor(2..=14)
//!
//! raw IMU (20 bytes)
//!   0  1   2      3..7        7..13             13..19             19
//!  A5 5B  sensor  timestamp   gyro xyz (0.1dps)  accel xyz (mg)    xor(2..=18)
//!
//! haptic command (8 bytes)
//!   0  1   2        3         4          5..7      7
//!  B6 6B  channel  actuator  intensity  duration  xor(2..=6)
//! ```
//!
//! Angles travel as signed centidegrees, so a decoded frame always sits on
//! the 0.01 degree grid.

mod decoder;
pub mod records;

pub use decoder::{decode_stream, DecodeOutput, Diagnostic, StreamDecoder};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const IMU_SYNC: u8 = 0xA5;
pub const FILTERED_SYNC: u8 = 0x5A;
pub const RAW_SYNC: u8 = 0x5B;
pub const HAPTIC_SYNC: [u8; 2] = [0xB6, 0x6B];

pub const FILTERED_LEN: usize = 16;
pub const RAW_LEN: usize = 20;
pub const HAPTIC_LEN: usize = 8;

/// Largest angle magnitude on the wire, in centidegrees.
pub const MAX_ANGLE_CDEG: i16 = 18_000;
/// Largest gyro magnitude on the wire, in 0.1 dps units (2000 dps).
pub const MAX_GYRO_DDPS: i16 = 20_000;
/// Largest accelerometer magnitude on the wire, in milli-g.
pub const MAX_ACCEL_MG: i16 = 16_000;

/// Status flag: the sensor reports a completed on-board calibration.
pub const FLAG_CALIBRATED: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("{field} out of wire range: {value}")]
    Range { field: &'static str, value: f64 },
    #[error("unknown {kind} code {code}")]
    UnknownCode { kind: &'static str, code: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorId {
    Thigh = 0,
    Calf = 1,
}

impl SensorId {
    pub const ALL: [SensorId; 2] = [SensorId::Thigh, SensorId::Calf];

    pub fn from_code(code: u8) -> Result<Self, ProtocolError> {
        match code {
            0 => Ok(SensorId::Thigh),
            1 => Ok(SensorId::Calf),
            _ => Err(ProtocolError::UnknownCode { kind: "sensor", code }),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorId::Thigh => "thigh",
            SensorId::Calf => "calf",
        }
    }
}

/// One orientation sample as produced by an on-board attitude filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImuFrameFiltered {
    pub sensor: SensorId,
    pub timestamp_ms: u32,
    pub roll_cdeg: i16,
    pub pitch_cdeg: i16,
    pub yaw_cdeg: i16,
    pub flags: u8,
}

impl ImuFrameFiltered {
    /// Builds a frame from angles in degrees, rounding to the centidegree grid.
    pub fn from_degrees(
        sensor: SensorId,
        timestamp_ms: u32,
        roll: f64,
        pitch: f64,
        yaw: f64,
        flags: u8,
    ) -> Result<Self, ProtocolError> {
        Ok(Self {
            sensor,
            timestamp_ms,
            roll_cdeg: to_centidegrees("roll", roll)?,
            pitch_cdeg: to_centidegrees("pitch", pitch)?,
            yaw_cdeg: to_centidegrees("yaw", yaw)?,
            flags,
        })
    }

    pub fn roll(&self) -> f64 {
        f64::from(self.roll_cdeg) / 100.0
    }

    pub fn pitch(&self) -> f64 {
        f64::from(self.pitch_cdeg) / 100.0
    }

    pub fn yaw(&self) -> f64 {
        f64::from(self.yaw_cdeg) / 100.0
    }

    pub fn is_calibrated(&self) -> bool {
        self.flags & FLAG_CALIBRATED != 0
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        for (field, v) in [
            ("roll", self.roll_cdeg),
            ("pitch", self.pitch_cdeg),
            ("yaw", self.yaw_cdeg),
        ] {
            if v.unsigned_abs() > MAX_ANGLE_CDEG as u16 {
                return Err(ProtocolError::Range {
                    field,
                    value: f64::from(v) / 100.0,
                });
            }
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<[u8; FILTERED_LEN], ProtocolError> {
        self.validate()?;
        let mut out = [0u8; FILTERED_LEN];
        out[0] = IMU_SYNC;
        out[1] = FILTERED_SYNC;
        out[2] = self.sensor as u8;
        out[3..7].copy_from_slice(&self.timestamp_ms.to_le_bytes());
        out[7..9].copy_from_slice(&self.roll_cdeg.to_le_bytes());
        out[9..11].copy_from_slice(&self.pitch_cdeg.to_le_bytes());
        out[11..13].copy_from_slice(&self.yaw_cdeg.to_le_bytes());
        out[13] = self.flags;
        out[14] = 0;
        out[15] = xor(&out[2..15]);
        Ok(out)
    }

    fn decode_body(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes[14] != 0 {
            return Err(ProtocolError::UnknownCode {
                kind: "reserved",
                code: bytes[14],
            });
        }
        let frame = Self {
            sensor: SensorId::from_code(bytes[2])?,
            timestamp_ms: u32::from_le_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]),
            roll_cdeg: i16::from_le_bytes([bytes[7], bytes[8]]),
            pitch_cdeg: i16::from_le_bytes([bytes[9], bytes[10]]),
            yaw_cdeg: i16::from_le_bytes([bytes[11], bytes[12]]),
            flags: bytes[13],
        };
        frame.validate()?;
        Ok(frame)
    }
}

/// One raw inertial sample: body-frame angular rate and gravity-direction
/// acceleration.
///
/// The accelerometer convention is the gravity vector itself, so a sensor
/// lying flat reads `(0, 0, -1000)` mg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImuFrameRaw {
    pub sensor: SensorId,
    pub timestamp_ms: u32,
    /// Angular rate in 0.1 deg/s units.
    pub gyro_ddps: [i16; 3],
    /// Acceleration in milli-g.
    pub accel_mg: [i16; 3],
}

impl ImuFrameRaw {
    pub fn from_physical(
        sensor: SensorId,
        timestamp_ms: u32,
        gyro_dps: [f64; 3],
        accel_mg: [f64; 3],
    ) -> Result<Self, ProtocolError> {
        let mut gyro = [0i16; 3];
        let mut accel = [0i16; 3];
        for i in 0..3 {
            gyro[i] = scaled_i16("gyro", gyro_dps[i] * 10.0, MAX_GYRO_DDPS)?;
            accel[i] = scaled_i16("accel", accel_mg[i], MAX_ACCEL_MG)?;
        }
        Ok(Self {
            sensor,
            timestamp_ms,
            gyro_ddps: gyro,
            accel_mg: accel,
        })
    }

    pub fn gyro_dps(&self) -> [f64; 3] {
        self.gyro_ddps.map(|v| f64::from(v) / 10.0)
    }

    pub fn accel_g(&self) -> [f64; 3] {
        self.accel_mg.map(|v| f64::from(v) / 1000.0)
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        for &g in &self.gyro_ddps {
            if g.unsigned_abs() > MAX_GYRO_DDPS as u16 {
                return Err(ProtocolError::Range {
                    field: "gyro",
                    value: f64::from(g) / 10.0,
                });
            }
        }
        for &a in &self.accel_mg {
            if a.unsigned_abs() > MAX_ACCEL_MG as u16 {
                return Err(ProtocolError::Range {
                    field: "accel",
                    value: f64::from(a),
                });
            }
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<[u8; RAW_LEN], ProtocolError> {
        self.validate()?;
        let mut out = [0u8; RAW_LEN];
        out[0] = IMU_SYNC;
        out[1] = RAW_SYNC;
        out[2] = self.sensor as u8;
        out[3..7].copy_from_slice(&self.timestamp_ms.to_le_bytes());
        for (i, v) in self.gyro_ddps.iter().chain(self.accel_mg.iter()).enumerate() {
            out[7 + 2 * i..9 + 2 * i].copy_from_slice(&v.to_le_bytes());
        }
        out[19] = xor(&out[2..19]);
        Ok(out)
    }

    fn decode_body(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let word = |i: usize| i16::from_le_bytes([bytes[7 + 2 * i], bytes[8 + 2 * i]]);
        let frame = Self {
            sensor: SensorId::from_code(bytes[2])?,
            timestamp_ms: u32::from_le_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]),
            gyro_ddps: [word(0), word(1), word(2)],
            accel_mg: [word(3), word(4), word(5)],
        };
        frame.validate()?;
        Ok(frame)
    }
}

/// Strap side carrying one vibrator and one airbag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HapticChannel {
    ThighUp = 0,
    ThighDown = 1,
    CalfUp = 2,
    CalfDown = 3,
}

impl HapticChannel {
    pub const ALL: [HapticChannel; 4] = [
        HapticChannel::ThighUp,
        HapticChannel::ThighDown,
        HapticChannel::CalfUp,
        HapticChannel::CalfDown,
    ];

    pub fn from_code(code: u8) -> Result<Self, ProtocolError> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(ProtocolError::UnknownCode {
                kind: "channel",
                code,
            })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            HapticChannel::ThighUp => "thigh_up",
            HapticChannel::ThighDown => "thigh_down",
            HapticChannel::CalfUp => "calf_up",
            HapticChannel::CalfDown => "calf_down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorKind {
    Vibro = 0,
    PumpInflate = 1,
    PumpDeflate = 2,
}

impl ActuatorKind {
    pub fn from_code(code: u8) -> Result<Self, ProtocolError> {
        match code {
            0 => Ok(ActuatorKind::Vibro),
            1 => Ok(ActuatorKind::PumpInflate),
            2 => Ok(ActuatorKind::PumpDeflate),
            _ => Err(ProtocolError::UnknownCode {
                kind: "actuator",
                code,
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActuatorKind::Vibro => "vibro",
            ActuatorKind::PumpInflate => "pump_inflate",
            ActuatorKind::PumpDeflate => "pump_deflate",
        }
    }
}

/// A directive for one strap actuator. A zero duration holds until superseded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HapticCommandFrame {
    pub channel: HapticChannel,
    pub actuator: ActuatorKind,
    pub intensity: u8,
    pub duration_ms: u16,
}

impl HapticCommandFrame {
    pub fn encode(&self) -> [u8; HAPTIC_LEN] {
        let mut out = [0u8; HAPTIC_LEN];
        out[..2].copy_from_slice(&HAPTIC_SYNC);
        out[2] = self.channel as u8;
        out[3] = self.actuator as u8;
        out[4] = self.intensity;
        out[5..7].copy_from_slice(&self.duration_ms.to_le_bytes());
        out[7] = xor(&out[2..7]);
        out
    }

    fn decode_body(bytes: &[u8]) -> Result<Self, ProtocolError> {
        Ok(Self {
            channel: HapticChannel::from_code(bytes[2])?,
            actuator: ActuatorKind::from_code(bytes[3])?,
            intensity: bytes[4],
            duration_ms: u16::from_le_bytes([bytes[5], bytes[6]]),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImuFrame {
    Filtered(ImuFrameFiltered),
    Raw(ImuFrameRaw),
}

impl ImuFrame {
    pub fn sensor(&self) -> SensorId {
        match self {
            ImuFrame::Filtered(f) => f.sensor,
            ImuFrame::Raw(f) => f.sensor,
        }
    }

    pub fn timestamp_ms(&self) -> u32 {
        match self {
            ImuFrame::Filtered(f) => f.timestamp_ms,
            ImuFrame::Raw(f) => f.timestamp_ms,
        }
    }
}

/// Anything the stream decoder can recover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Filtered(ImuFrameFiltered),
    Raw(ImuFrameRaw),
    Haptic(HapticCommandFrame),
}

impl Frame {
    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        Ok(match self {
            Frame::Filtered(f) => f.encode()?.to_vec(),
            Frame::Raw(f) => f.encode()?.to_vec(),
            Frame::Haptic(h) => h.encode().to_vec(),
        })
    }

    pub fn as_imu(&self) -> Option<ImuFrame> {
        match *self {
            Frame::Filtered(f) => Some(ImuFrame::Filtered(f)),
            Frame::Raw(f) => Some(ImuFrame::Raw(f)),
            Frame::Haptic(_) => None,
        }
    }
}

impl From<ImuFrame> for Frame {
    fn from(f: ImuFrame) -> Self {
        match f {
            ImuFrame::Filtered(f) => Frame::Filtered(f),
            ImuFrame::Raw(f) => Frame::Raw(f),
        }
    }
}

pub fn encode_imu_frame(frame: &ImuFrame) -> Result<Vec<u8>, ProtocolError> {
    Frame::from(*frame).encode()
}

pub fn encode_haptic_frame(cmd: &HapticCommandFrame) -> [u8; HAPTIC_LEN] {
    cmd.encode()
}

pub(crate) fn xor(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

fn to_centidegrees(field: &'static str, degrees: f64) -> Result<i16, ProtocolError> {
    scaled_i16(field, degrees * 100.0, MAX_ANGLE_CDEG)
}

fn scaled_i16(field: &'static str, scaled: f64, limit: i16) -> Result<i16, ProtocolError> {
    let r = scaled.round();
    if !r.is_finite() || r.abs() > f64::from(limit) {
        return Err(ProtocolError::Range {
            field,
            value: scaled,
        });
    }
    Ok(r as i16)
}
