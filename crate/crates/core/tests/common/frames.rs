//! Random valid frames and an independent byte-level encoder.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rehab_core::protocol::{
    ActuatorKind, Frame, HapticChannel, HapticCommandFrame, ImuFrameFiltered, ImuFrameRaw, SensorId,
};

pub fn random_frame(rng: &mut ChaCha8Rng) -> Frame {
    let sensor = if rng.random() { SensorId::Thigh } else { SensorId::Calf };
    match rng.random_range(0..3) {
        0 => Frame::Filtered(ImuFrameFiltered {
            sensor,
            timestamp_ms: rng.random(),
            roll_cdeg: rng.random_range(-18_000..=18_000),
            pitch_cdeg: rng.random_range(-18_000..=18_000),
            yaw_cdeg: rng.random_range(-18_000..=18_000),
            flags: rng.random(),
        }),
        1 => Frame::Raw(ImuFrameRaw {
            sensor,
            timestamp_ms: rng.random(),
            gyro_ddps: std::array::from_fn(|_| rng.random_range(-20_000..=20_000)),
            accel_mg: std::array::from_fn(|_| rng.random_range(-16_000..=16_000)),
        }),
        _ => Frame::Haptic(HapticCommandFrame {
            channel: HapticChannel::ALL[rng.random_range(0..4)],
            actuator: [ActuatorKind::Vibro, ActuatorKind::PumpInflate, ActuatorKind::PumpDeflate][rng.random_range(0..3)],
            intensity: rng.random(),
            duration_ms: rng.random(),
        }),
    }
}

fn seal(mut body: Vec<u8>) -> Vec<u8> {
    let c = body[2..].iter().fold(0u8, |a, b| a ^ b);
    body.push(c);
    body
}

fn le16(v: i16) -> [u8; 2] {
    let u = v as u16;
    [(u & 0xFF) as u8, (u >> 8) as u8]
}

fn le32(v: u32) -> [u8; 4] {
    [v as u8, (v >> 8) as u8, (v >> 16) as u8, (v >> 24) as u8]
}

/// Byte layout written out field by field, without the library encoder.
pub fn reference_encode(frame: &Frame) -> Vec<u8> {
    match frame {
        Frame::Filtered(f) => {
            let mut b = vec![0xA5, 0x5A, f.sensor as u8];
            b.extend(le32(f.timestamp_ms));
            for v in [f.roll_cdeg, f.pitch_cdeg, f.yaw_cdeg] {
                b.extend(le16(v));
            }
            b.push(f.flags);
            b.push(0);
            seal(b)
        }
        Frame::Raw(f) => {
            let mut b = vec![0xA5, 0x5B, f.sensor as u8];
            b.extend(le32(f.timestamp_ms));
            for v in f.gyro_ddps.iter().chain(&f.accel_mg) {
                b.extend(le16(*v));
            }
            seal(b)
        }
        Frame::Haptic(h) => {
            let mut b = vec![0xB6, 0x6B, h.channel as u8, h.actuator as u8, h.intensity];
            b.extend([h.duration_ms as u8, (h.duration_ms >> 8) as u8]);
            seal(b)
        }
    }
}
