//! Line-delimited text form of wire frames, for hand-editable fixtures.
//!
//! One frame per line, comma separated, fields in this order:
//!
//! ```text
//! F,<sensor>,<timestamp_ms>,<roll_deg>,<pitch_deg>,<yaw_deg>,<flags>
//! R,<sensor>,<timestamp_ms>,<gx_dps>,<gy_dps>,<gz_dps>,<ax_mg>,<ay_mg>,<az_mg>
//! H,<channel>,<actuator>,<intensity>,<duration_ms>
//! ```
//!
//! `sensor` is `thigh` or `calf`; `channel` and `actuator` use their snake
//! case names. Angles carry two decimals and gyro rates one, which is exactly
//! the wire resolution, so text and binary forms convert without loss. Blank
//! lines and lines starting with `#` are ignored by [`parse_line`].

use super::{
    ActuatorKind, Frame, HapticChannel, HapticCommandFrame, ImuFrameFiltered, ImuFrameRaw,
    SensorId,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct RecordError {
    pub message: String,
}

fn err(message: impl Into<String>) -> RecordError {
    RecordError {
        message: message.into(),
    }
}

pub fn format_frame(frame: &Frame) -> String {
    match frame {
        Frame::Filtered(f) => format!(
            "F,{},{},{},{},{},{}",
            f.sensor.name(),
            f.timestamp_ms,
            fixed(i32::from(f.roll_cdeg), 100),
            fixed(i32::from(f.pitch_cdeg), 100),
            fixed(i32::from(f.yaw_cdeg), 100),
            f.flags
        ),
        Frame::Raw(f) => format!(
            "R,{},{},{},{},{},{},{},{}",
            f.sensor.name(),
            f.timestamp_ms,
            fixed(i32::from(f.gyro_ddps[0]), 10),
            fixed(i32::from(f.gyro_ddps[1]), 10),
            fixed(i32::from(f.gyro_ddps[2]), 10),
            f.accel_mg[0],
            f.accel_mg[1],
            f.accel_mg[2]
        ),
        Frame::Haptic(h) => format!(
            "H,{},{},{},{}",
            h.channel.name(),
            h.actuator.name(),
            h.intensity,
            h.duration_ms
        ),
    }
}

/// Integer in 1/`scale` units rendered as a decimal without float rounding.
fn fixed(value: i32, scale: i32) -> String {
    let digits = if scale == 100 { 2 } else { 1 };
    let sign = if value < 0 { "-" } else { "" };
    let a = value.abs();
    format!("{sign}{}.{:0width$}", a / scale, a % scale, width = digits)
}

/// Parses one record. Returns `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str) -> Result<Option<Frame>, RecordError> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let expect = |n: usize| {
        if fields.len() == n {
            Ok(())
        } else {
            Err(err(format!(
                "expected {n} fields for '{}' record, found {}",
                fields[0],
                fields.len()
            )))
        }
    };
    let frame = match fields[0] {
        "F" => {
            expect(7)?;
            let f = ImuFrameFiltered::from_degrees(
                parse_sensor(fields[1])?,
                parse_num(fields[2], "timestamp")?,
                parse_num(fields[3], "roll")?,
                parse_num(fields[4], "pitch")?,
                parse_num(fields[5], "yaw")?,
                parse_num(fields[6], "flags")?,
            )
            .map_err(|e| err(e.to_string()))?;
            Frame::Filtered(f)
        }
        "R" => {
            expect(9)?;
            let mut gyro = [0.0; 3];
            let mut accel = [0.0; 3];
            for i in 0..3 {
                gyro[i] = parse_num(fields[3 + i], "gyro")?;
                accel[i] = parse_num(fields[6 + i], "accel")?;
            }
            let f = ImuFrameRaw::from_physical(
                parse_sensor(fields[1])?,
                parse_num(fields[2], "timestamp")?,
                gyro,
                accel,
            )
            .map_err(|e| err(e.to_string()))?;
            Frame::Raw(f)
        }
        "H" => {
            expect(5)?;
            let channel = HapticChannel::ALL
                .into_iter()
                .find(|c| c.name() == fields[1])
                .ok_or_else(|| err(format!("unknown channel '{}'", fields[1])))?;
            let actuator = [
                ActuatorKind::Vibro,
                ActuatorKind::PumpInflate,
                ActuatorKind::PumpDeflate,
            ]
            .into_iter()
            .find(|a| a.name() == fields[2])
            .ok_or_else(|| err(format!("unknown actuator '{}'", fields[2])))?;
            Frame::Haptic(HapticCommandFrame {
                channel,
                actuator,
                intensity: parse_num(fields[3], "intensity")?,
                duration_ms: parse_num(fields[4], "duration")?,
            })
        }
        other => return Err(err(format!("unknown record type '{other}'"))),
    };
    Ok(Some(frame))
}

fn parse_sensor(s: &str) -> Result<SensorId, RecordError> {
    SensorId::ALL
        .into_iter()
        .find(|id| id.name() == s)
        .ok_or_else(|| err(format!("unknown sensor '{s}'")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, RecordError> {
    s.parse()
        .map_err(|_| err(format!("bad {what} value '{s}'")))
}
