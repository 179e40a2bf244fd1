//! Line-delimited haptic command log:
//! `<timestamp_ms>,<channel>,<actuator>,<intensity>,<duration_ms>`.

use crate::protocol::records::{format_frame, parse_line, RecordError};
use crate::protocol::{Frame, HapticCommandFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HapticLogEntry {
    pub timestamp_ms: u32,
    pub command: HapticCommandFrame,
}

pub fn format_log_line(entry: &HapticLogEntry) -> String {
    // Reuse the fixture record and drop its leading type tag.
    let record = format_frame(&Frame::Haptic(entry.command));
    format!("{},{}", entry.timestamp_ms, &record[2..])
}

pub fn parse_log_line(line: &str) -> Result<HapticLogEntry, RecordError> {
    let (ts, rest) = line
        .trim()
        .split_once(',')
        .ok_or_else(|| RecordError {
            message: format!("malformed haptic log line '{line}'"),
        })?;
    let timestamp_ms = ts.parse().map_err(|_| RecordError {
        message: format!("bad timestamp '{ts}'"),
    })?;
    match parse_line(&format!("H,{rest}"))? {
        Some(Frame::Haptic(command)) => Ok(HapticLogEntry {
            timestamp_ms,
            command,
        }),
        _ => Err(RecordError {
            message: format!("malformed haptic log line '{line}'"),
        }),
    }
}
