//! Haptic feedback policy: airbag guidance while moving toward the target,
//! vibration warnings while holding.
//!
//! Planning is a pure function of phase and deviation. The plan describes the
//! desired actuator state; [`CommandScheduler`] turns successive plans into
//! the frames that actually need to go over the link.

mod log;

pub use log::{format_log_line, parse_log_line, HapticLogEntry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{ExercisePose, ExerciseSpec};
use crate::protocol::{ActuatorKind, HapticChannel, HapticCommandFrame};
use crate::session::MovementPhase;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid feedback policy: {0}")]
pub struct PolicyError(pub String);

/// Which strap side to actuate for each correction direction.
///
/// `raise` is actuated when the controlled angle must increase; the airbag
/// there presses from the side opposite the required motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelMap {
    pub raise: HapticChannel,
    pub lower: HapticChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExerciseChannels {
    pub straight_leg_raise: ChannelMap,
    pub prone_straight_leg_raise: ChannelMap,
    pub bed_supported_knee_bend: ChannelMap,
    pub knee_extension: ChannelMap,
}

impl Default for ExerciseChannels {
    fn default() -> Self {
        use HapticChannel::*;
        Self {
            straight_leg_raise: ChannelMap {
                raise: CalfDown,
                lower: CalfUp,
            },
            prone_straight_leg_raise: ChannelMap {
                raise: ThighDown,
                lower: ThighUp,
            },
            bed_supported_knee_bend: ChannelMap {
                raise: CalfUp,
                lower: CalfDown,
            },
            knee_extension: ChannelMap {
                raise: CalfDown,
                lower: CalfUp,
            },
        }
    }
}

impl ExerciseChannels {
    pub fn for_pose(&self, pose: ExercisePose) -> ChannelMap {
        match pose {
            ExercisePose::StraightLegRaise => self.straight_leg_raise,
            ExercisePose::ProneStraightLegRaise => self.prone_straight_leg_raise,
            ExercisePose::BedSupportedKneeBend => self.bed_supported_knee_bend,
            ExercisePose::KneeExtension => self.knee_extension,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackPolicy {
    /// Seconds for airbag intensity to ramp from zero to full.
    pub ramp_time: f64,
    pub vibro_intensity: u8,
    pub vibro_pulse_ms: u16,
    pub vibro_enabled: bool,
    pub pneumatic_enabled: bool,
    /// Airbag correction in FineTuning while outside the hold band.
    pub fine_tuning_pneumatic: bool,
    pub channels: ExerciseChannels,
}

impl Default for FeedbackPolicy {
    fn default() -> Self {
        Self {
            ramp_time: 1.5,
            vibro_intensity: 255,
            vibro_pulse_ms: 300,
            vibro_enabled: true,
            pneumatic_enabled: true,
            fine_tuning_pneumatic: true,
            channels: ExerciseChannels::default(),
        }
    }
}

impl FeedbackPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.ramp_time > 0.0 && self.ramp_time.is_finite()) {
            return Err(PolicyError(format!("ramp_time must be positive, got {}", self.ramp_time)));
        }
        if self.vibro_pulse_ms == 0 {
            return Err(PolicyError("vibro_pulse_ms must be positive".into()));
        }
        for pose in ExercisePose::ALL {
            let m = self.channels.for_pose(pose);
            if m.raise == m.lower {
                return Err(PolicyError(format!(
                    "{}: raise and lower channels must differ",
                    pose.name()
                )));
            }
        }
        Ok(())
    }

    /// Airbag intensity after `elapsed` seconds of ramping, rounded half to even.
    pub fn ramp_intensity(&self, elapsed: f64) -> u8 {
        let fraction = (elapsed.max(0.0) / self.ramp_time).min(1.0);
        (255.0 * fraction).round_ties_even() as u8
    }
}

fn command(channel: HapticChannel, actuator: ActuatorKind, intensity: u8, duration_ms: u16) -> HapticCommandFrame {
    HapticCommandFrame {
        channel,
        actuator,
        intensity,
        duration_ms,
    }
}

fn deflate_all() -> Vec<HapticCommandFrame> {
    HapticChannel::ALL
        .into_iter()
        .map(|c| command(c, ActuatorKind::PumpDeflate, 0, 0))
        .collect()
}

/// Desired actuator commands for the current phase and deviation.
///
/// `elapsed_in_phase` is in seconds. Deviation is signed: negative means the
/// controlled angle is short of the target.
pub fn plan_feedback(
    phase: MovementPhase,
    deviation: f64,
    spec: &ExerciseSpec,
    policy: &FeedbackPolicy,
    elapsed_in_phase: f64,
) -> Vec<HapticCommandFrame> {
    let map = policy.channels.for_pose(spec.pose);
    let toward_target = |d: f64| if d < 0.0 { Some(map.raise) } else if d > 0.0 { Some(map.lower) } else { None };
    match phase {
        MovementPhase::Reaching => match toward_target(deviation) {
            Some(ch) if policy.pneumatic_enabled => vec![command(
                ch,
                ActuatorKind::PumpInflate,
                policy.ramp_intensity(elapsed_in_phase),
                0,
            )],
            _ => Vec::new(),
        },
        MovementPhase::FineTuning => {
            let engaged = policy.pneumatic_enabled
                && policy.fine_tuning_pneumatic
                && deviation.abs() > spec.hold_band;
            match toward_target(deviation) {
                Some(ch) if engaged => vec![command(
                    ch,
                    ActuatorKind::PumpInflate,
                    policy.ramp_intensity(elapsed_in_phase),
                    0,
                )],
                _ => vec![
                    command(map.raise, ActuatorKind::PumpDeflate, 0, 0),
                    command(map.lower, ActuatorKind::PumpDeflate, 0, 0),
                ],
            }
        }
        MovementPhase::Holding => {
            if !policy.vibro_enabled || deviation.abs() <= spec.hold_band {
                return Vec::new();
            }
            // Pulses never outlast the countdown.
            let elapsed_ms = (elapsed_in_phase.max(0.0) * 1000.0).round();
            let remaining = f64::from(spec.hold_duration_ms()) - elapsed_ms;
            if remaining < 1.0 {
                return Vec::new();
            }
            let duration = remaining.min(f64::from(policy.vibro_pulse_ms)) as u16;
            let ch = if deviation < 0.0 { map.raise } else { map.lower };
            vec![command(ch, ActuatorKind::Vibro, policy.vibro_intensity, duration)]
        }
        MovementPhase::Understanding | MovementPhase::Retrieving | MovementPhase::Rest => deflate_all(),
    }
}

/// Per-channel actuator state implied by what has been transmitted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActuatorState {
    /// Intensity of an inflated airbag.
    pub pump: [Option<u8>; 4],
    /// End of the running vibration pulse, ms.
    pub vibro_until: [Option<u64>; 4],
}

impl ActuatorState {
    fn from_plan(plan: &[HapticCommandFrame]) -> Self {
        let mut s = Self::default();
        for c in plan {
            let i = c.channel.index();
            match c.actuator {
                ActuatorKind::PumpInflate => s.pump[i] = Some(c.intensity),
                ActuatorKind::PumpDeflate => s.pump[i] = None,
                ActuatorKind::Vibro => s.vibro_until[i] = Some(u64::MAX),
            }
        }
        s
    }

    /// Frames needed to move from this state to `plan` at time `now`.
    fn apply(&mut self, plan: &[HapticCommandFrame], now: u64) -> Vec<HapticCommandFrame> {
        let desired = Self::from_plan(plan);
        let mut frames = Vec::new();
        for ch in HapticChannel::ALL {
            let i = ch.index();
            match (self.pump[i], desired.pump[i]) {
                (Some(cur), Some(want)) if cur == want => {}
                (_, Some(want)) => frames.push(command(ch, ActuatorKind::PumpInflate, want, 0)),
                (Some(_), None) => frames.push(command(ch, ActuatorKind::PumpDeflate, 0, 0)),
                (None, None) => {}
            }
            self.pump[i] = desired.pump[i];
        }
        for c in plan.iter().filter(|c| c.actuator == ActuatorKind::Vibro) {
            let i = c.channel.index();
            let running = self.vibro_until[i].is_some_and(|until| now < until);
            if !running {
                frames.push(*c);
                self.vibro_until[i] = Some(if c.duration_ms == 0 {
                    u64::MAX
                } else {
                    now + u64::from(c.duration_ms)
                });
            }
        }
        frames
    }
}

/// Frames that change actuator state when `next` replaces `prev`.
pub fn command_diff(prev: &[HapticCommandFrame], next: &[HapticCommandFrame]) -> Vec<HapticCommandFrame> {
    let mut state = ActuatorState::from_plan(prev);
    for (i, until) in state.vibro_until.iter_mut().enumerate() {
        // A vibration that the next plan drops is simply left to lapse.
        if !next.iter().any(|c| c.actuator == ActuatorKind::Vibro && c.channel.index() == i) {
            *until = None;
        }
    }
    state.apply(next, 0)
}

/// Single writer for the haptic link: remembers what was sent and emits
/// only changes, retriggering vibration pulses once they lapse.
#[derive(Debug, Clone, Default)]
pub struct CommandScheduler {
    state: ActuatorState,
}

impl CommandScheduler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> &ActuatorState {
        &self.state
    }

    pub fn schedule(&mut self, now_ms: u32, plan: &[HapticCommandFrame]) -> Vec<HapticCommandFrame> {
        self.state.apply(plan, u64::from(now_ms))
    }

    /// True when no airbag is inflated and no pulse runs past `now_ms`.
    pub fn all_off(&self, now_ms: u32) -> bool {
        self.state.pump.iter().all(Option::is_none)
            && self
                .state
                .vibro_until
                .iter()
                .all(|u| u.is_none_or(|until| until <= u64::from(now_ms)))
    }
}
