//! Online processing chain shared by live streaming, replay and simulation:
//! bytes → frames → paired segment orientations → leg pose → phase engine →
//! feedback plan → transmitted haptic commands.
//!
//! Processing depends only on the frames, never on how the byte stream was
//! chunked, so a recorded stream replays to the same report and command log.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::feedback::{plan_feedback, CommandScheduler, FeedbackPolicy, HapticLogEntry};
use crate::kinematics::{
    calibrate, compute_leg_pose, deviation, quaternion_from_euler_degrees, CalibrationPose, KinematicsError,
    LegPose, OrientationState, StillnessTracker, DEFAULT_ALPHA,
};
use crate::metrics::{build_report, config_hash, ReportContext, SessionReport};
use crate::protocol::{
    encode_imu_frame, Diagnostic, StreamDecoder, ActuatorKind, Frame, HapticChannel, HapticCommandFrame, ImuFrame, SensorId,
};
use crate::session::{Engine, MovementPhase, PhaseEvent, SessionConfig, SessionError, SessionProgress};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub session: SessionConfig,
    pub feedback: FeedbackPolicy,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.session.validate().map_err(|e| e.to_string())?;
        self.feedback.validate().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineDiagnostic {
    #[error("{0}")]
    Decode(Diagnostic),
    #[error("unpaired {sensor:?} frame at {timestamp_ms} ms")]
    Unpaired { sensor: SensorId, timestamp_ms: u32 },
    #[error("haptic frame in sensor stream ignored")]
    StrayHaptic,
    #[error("{0}")]
    Session(SessionError),
    #[error("{0}")]
    Kinematics(KinematicsError),
}

impl PipelineDiagnostic {
    /// Whether the diagnostic points at damaged or misordered input data.
    pub fn is_corruption(&self) -> bool {
        !matches!(self, PipelineDiagnostic::StrayHaptic)
    }
}

/// One line of the session event log: a finished phase, stamped with its
/// start and the pose it was entered with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventLogEntry {
    pub timestamp_ms: u32,
    pub phase: MovementPhase,
    pub angle: f64,
    pub deviation: f64,
}

impl EventLogEntry {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{:.2},{:.2}",
            self.timestamp_ms,
            self.phase.name(),
            self.angle,
            self.deviation
        )
    }
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    decoder: StreamDecoder,
    /// Latest unpaired frame per sensor: timestamp and orientation.
    pending: [Option<(u32, UnitQuaternion<f64>)>; 2],
    filters: [Option<OrientationState>; 2],
    stillness: StillnessTracker,
    calibration: Option<CalibrationPose>,
    calibration_record: Option<String>,
    engine: Engine,
    scheduler: CommandScheduler,
    prev_pose: Option<LegPose>,
    last_pose: Option<LegPose>,
    hasher: Sha256,
    frames_seen: u64,
    haptic_log: Vec<HapticLogEntry>,
    event_log: Vec<EventLogEntry>,
    diagnostics: Vec<PipelineDiagnostic>,
    finished: bool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, String> {
        config.validate()?;
        let engine = Engine::new(config.session.clone()).map_err(|e| e.to_string())?;
        Ok(Self {
            config,
            decoder: StreamDecoder::new(),
            pending: [None, None],
            filters: [None, None],
            stillness: StillnessTracker::new(),
            calibration: None,
            calibration_record: None,
            engine,
            scheduler: CommandScheduler::new(),
            prev_pose: None,
            last_pose: None,
            hasher: Sha256::new(),
            frames_seen: 0,
            haptic_log: Vec::new(),
            event_log: Vec::new(),
            diagnostics: Vec::new(),
            finished: false,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn progress(&self) -> SessionProgress {
        self.engine.progress()
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibration.is_some()
    }

    /// Text record of the calibration in use.
    pub fn calibration_record(&self) -> Option<&str> {
        self.calibration_record.as_deref()
    }

    pub fn last_pose(&self) -> Option<&LegPose> {
        self.last_pose.as_ref()
    }

    pub fn haptic_log(&self) -> &[HapticLogEntry] {
        &self.haptic_log
    }

    pub fn event_log(&self) -> &[EventLogEntry] {
        &self.event_log
    }

    pub fn diagnostics(&self) -> &[PipelineDiagnostic] {
        &self.diagnostics
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    /// Whether every airbag is deflated and no pulse is running at `now_ms`.
    pub fn actuators_idle(&self, now_ms: u32) -> bool {
        self.scheduler.all_off(now_ms)
    }

    /// Feeds raw link bytes; returns the haptic commands transmitted meanwhile.
    pub fn push_bytes(&mut self, bytes: &[u8]) -> Vec<HapticLogEntry> {
        let out = self.decoder.push(bytes);
        self.diagnostics
            .extend(out.diagnostics.into_iter().map(PipelineDiagnostic::Decode));
        self.push_frames(&out.frames)
    }

    /// Feeds already-decoded frames.
    pub fn push_frames(&mut self, frames: &[Frame]) -> Vec<HapticLogEntry> {
        let start = self.haptic_log.len();
        for frame in frames {
            match frame.as_imu() {
                Some(imu) => self.on_imu(imu),
                None => self.diagnostics.push(PipelineDiagnostic::StrayHaptic),
            }
        }
        self.haptic_log[start..].to_vec()
    }

    /// Ends the stream. An unfinished repetition is recorded as Aborted and
    /// every actuator is switched off.
    pub fn finish(&mut self) -> Vec<HapticLogEntry> {
        if self.finished {
            return Vec::new();
        }
        self.finished = true;
        let diags = self.decoder.finish();
        self.diagnostics
            .extend(diags.into_iter().map(PipelineDiagnostic::Decode));
        for sensor in SensorId::ALL {
            if let Some((t, _)) = self.pending[sensor.index()].take() {
                self.unpaired(sensor, t);
            }
        }
        let start = self.haptic_log.len();
        if let Some(rec) = self.engine.finish() {
            if let Some(ev) = rec.events.last() {
                self.log_event(ev, rec.exercise_index);
            }
        }
        if let Some(now) = self.engine.last_timestamp() {
            self.transmit(now, &all_deflate());
        }
        self.haptic_log[start..].to_vec()
    }

    pub fn report(&self, patient_id: &str) -> SessionReport {
        let ctx = ReportContext {
            session_id: self.session_id(),
            patient_id: patient_id.to_string(),
            config_hash: config_hash(&self.config),
            start_ms: self.engine.first_timestamp(),
            end_ms: self.engine.last_timestamp(),
        };
        build_report(self.engine.records(), &self.config.session.exercises, &ctx)
    }

    /// Digest of the sensor frames consumed so far, in canonical encoding.
    pub fn session_id(&self) -> String {
        self.hasher.clone().finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn on_imu(&mut self, frame: ImuFrame) {
        if let Ok(bytes) = encode_imu_frame(&frame) {
            self.hasher.update(&bytes);
        }
        self.frames_seen += 1;
        let sensor = frame.sensor();
        let ts = frame.timestamp_ms();
        let Some(q) = self.orientation_of(&frame) else {
            return;
        };
        if self.calibration.is_none() {
            self.stillness.observe_orientation(sensor, ts, q);
        }
        let other = match sensor {
            SensorId::Thigh => SensorId::Calf,
            SensorId::Calf => SensorId::Thigh,
        };
        if let Some((t, _)) = self.pending[sensor.index()].take() {
            self.unpaired(sensor, t);
        }
        match self.pending[other.index()] {
            Some((t, other_q)) if t == ts => {
                self.pending[other.index()] = None;
                let (thigh, calf) = match sensor {
                    SensorId::Thigh => (q, other_q),
                    SensorId::Calf => (other_q, q),
                };
                self.on_pair(ts, thigh, calf);
            }
            // The partner is newer, so this frame can no longer pair.
            Some((t, _)) if t > ts => self.unpaired(sensor, ts),
            partner => {
                if let Some((t, _)) = partner {
                    self.pending[other.index()] = None;
                    self.unpaired(other, t);
                }
                self.pending[sensor.index()] = Some((ts, q));
            }
        }
    }

    fn unpaired(&mut self, sensor: SensorId, timestamp_ms: u32) {
        self.diagnostics
            .push(PipelineDiagnostic::Unpaired { sensor, timestamp_ms });
    }

    fn orientation_of(&mut self, frame: &ImuFrame) -> Option<UnitQuaternion<f64>> {
        match frame {
            ImuFrame::Filtered(f) => Some(quaternion_from_euler_degrees(f.roll(), f.pitch(), f.yaw())),
            ImuFrame::Raw(r) => {
                let state = self.filters[r.sensor.index()].get_or_insert_with(|| OrientationState::new(DEFAULT_ALPHA));
                match state.update(r) {
                    Ok(()) => Some(state.orientation),
                    Err(e) => {
                        self.diagnostics.push(PipelineDiagnostic::Kinematics(e));
                        None
                    }
                }
            }
        }
    }

    fn on_pair(&mut self, ts: u32, thigh: UnitQuaternion<f64>, calf: UnitQuaternion<f64>) {
        let Some(cal) = self.calibration else {
            // World gravity points along -Z for both filtered and fused frames.
            if let Ok(cal) = calibrate(thigh, calf, -Vector3::z(), &self.stillness, ts) {
                // Use the calibration exactly as its text record reads back.
                let record = cal.to_record();
                self.calibration = Some(CalibrationPose::from_record(&record).unwrap_or(cal));
                self.calibration_record = Some(record);
            }
            return;
        };
        if self.engine.is_complete() {
            return;
        }
        let pose = match compute_leg_pose(&cal, &thigh, &calf, ts, self.prev_pose.as_ref()) {
            Ok(p) => p,
            Err(e) => {
                self.diagnostics.push(PipelineDiagnostic::Kinematics(e));
                return;
            }
        };
        self.process_pose(pose);
    }

    /// Feeds a leg pose directly, bypassing decoding and calibration.
    pub fn push_pose(&mut self, pose: LegPose) -> Vec<HapticLogEntry> {
        let start = self.haptic_log.len();
        if !self.engine.is_complete() {
            self.process_pose(pose);
        }
        self.haptic_log[start..].to_vec()
    }

    fn process_pose(&mut self, pose: LegPose) {
        let ts = pose.timestamp_ms;
        let out = match self.engine.step(&pose) {
            Ok(out) => out,
            Err(e) => {
                self.diagnostics.push(PipelineDiagnostic::Session(e));
                return;
            }
        };
        self.prev_pose = Some(pose);
        self.last_pose = Some(pose);
        for ev in &out.events {
            let exercise = out
                .completed_reps
                .iter()
                .find(|r| r.events.contains(ev))
                .map_or(self.engine.exercise_index(), |r| r.exercise_index);
            self.log_event(ev, exercise);
        }

        let plan = if self.engine.is_complete() {
            all_deflate()
        } else {
            let spec = self.engine.current_spec();
            let phase = self.engine.phase();
            let elapsed = f64::from(ts.saturating_sub(self.engine.phase_start_ts())) / 1000.0;
            plan_feedback(phase, deviation(&pose, spec), spec, &self.config.feedback, elapsed)
        };
        self.transmit(ts, &plan);
    }

    fn log_event(&mut self, ev: &PhaseEvent, exercise: usize) {
        let spec = &self.config.session.exercises[exercise];
        self.event_log.push(EventLogEntry {
            timestamp_ms: ev.start_ts,
            phase: ev.phase,
            angle: spec.controlled().read(&ev.entry_pose),
            deviation: deviation(&ev.entry_pose, spec),
        });
    }

    fn transmit(&mut self, now: u32, plan: &[HapticCommandFrame]) {
        for command in self.scheduler.schedule(now, plan) {
            self.haptic_log.push(HapticLogEntry {
                timestamp_ms: now,
                command,
            });
        }
    }
}

/// Runs recorded frames through a fresh pipeline and finishes it.
pub fn replay(config: PipelineConfig, frames: &[Frame]) -> Result<Pipeline, String> {
    let mut p = Pipeline::new(config)?;
    p.push_frames(frames);
    p.finish();
    Ok(p)
}

fn all_deflate() -> Vec<HapticCommandFrame> {
    HapticChannel::ALL
        .into_iter()
        .map(|channel| HapticCommandFrame {
            channel,
            actuator: ActuatorKind::PumpDeflate,
            intensity: 0,
            duration_ms: 0,
        })
        .collect()
}
