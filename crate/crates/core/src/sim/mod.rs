//! Closed-loop desk testbed: a synthetic patient drives two emulated
//! sensors, the bytes go through the full [`Pipeline`], and the haptic
//! commands it sends act back on the patient through an actuator emulator.
//!
//! Everything runs on a 100 Hz simulated clock; no wall-clock time is used.

mod device;
mod patient;
mod rig;
mod trace;

pub use device::{DeviceModel, DeviceState};
pub use patient::{patient_step, Observation, PatientModel, PatientState};
pub use rig::{rest_angle, segment_rotations, RigConfig};
pub use trace::{format_trace, parse_trace, Trace, TraceHeader};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::{FeedbackPolicy, HapticLogEntry};
use crate::metrics::SessionReport;
use crate::pipeline::{Pipeline, PipelineConfig, PipelineDiagnostic};
use crate::protocol::{Frame, HapticChannel};
use crate::session::SessionConfig;

pub const TICK_MS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Everything a simulated session needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub patient_id: String,
    /// Hard stop in simulated seconds; derived from the session when absent.
    pub max_duration: Option<f64>,
    pub patient: PatientModel,
    pub device: DeviceModel,
    pub rig: RigConfig,
    pub session: SessionConfig,
    pub feedback: FeedbackPolicy,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            patient_id: "sim-patient".into(),
            max_duration: None,
            patient: PatientModel::default(),
            device: DeviceModel::default(),
            rig: RigConfig::default(),
            session: SessionConfig::default(),
            feedback: FeedbackPolicy::default(),
        }
    }
}

impl Scenario {
    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            session: self.session.clone(),
            feedback: self.feedback.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = SimError::InvalidScenario;
        self.patient.validate().map_err(bad)?;
        self.device.validate().map_err(bad)?;
        self.pipeline_config().validate().map_err(bad)?;
        Ok(())
    }

    /// Simulated time limit in ms.
    pub fn time_limit_ms(&self) -> u64 {
        if let Some(s) = self.max_duration {
            return (s * 1000.0) as u64;
        }
        let s = &self.session;
        let per_rep = s.thresholds.reach_timeout + s.rep_break + 60.0;
        let reps: f64 = s
            .exercises
            .iter()
            .map(|e| f64::from(e.repetitions) * (per_rep + e.hold_duration))
            .sum();
        let breaks = s.inter_pose_break * s.exercises.len() as f64;
        ((reps + breaks + 60.0) * 1000.0) as u64
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: SessionReport,
    pub haptic_log: Vec<HapticLogEntry>,
    /// Sensor frames in transmission order.
    pub frames: Vec<Frame>,
    /// The same frames as link bytes.
    pub stream: Vec<u8>,
    pub calibration_record: Option<String>,
    pub event_log: Vec<String>,
    pub diagnostics: Vec<PipelineDiagnostic>,
    /// Range of the simulated controlled angle after calibration.
    pub angle_range: (f64, f64),
    pub duration_ms: u32,
}

impl SimOutput {
    pub fn trace(&self, scenario: &Scenario) -> Trace {
        Trace {
            header: TraceHeader {
                patient_id: scenario.patient_id.clone(),
                calibration: self.calibration_record.clone(),
                config: Some(scenario.pipeline_config()),
            },
            frames: self.frames.clone(),
        }
    }

    pub fn haptic_log_text(&self) -> String {
        self.haptic_log
            .iter()
            .map(|e| crate::feedback::format_log_line(e) + "\n")
            .collect()
    }
}

/// Runs one simulated session to completion or the time limit.
pub fn run_closed_loop(scenario: &Scenario) -> Result<SimOutput, SimError> {
    scenario.validate()?;
    let mut pipeline = Pipeline::new(scenario.pipeline_config()).map_err(SimError::InvalidScenario)?;
    let model = &scenario.patient;
    let exercises = &scenario.session.exercises;
    let mut patient = PatientState::new(model, scenario.seed, 0.0);
    let mut device = DeviceState::new();
    let limit = scenario.time_limit_ms();

    let mut frames = Vec::new();
    let mut stream = Vec::new();
    let mut posture: Option<usize> = None;
    let mut angle_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut t: u32 = 0;

    loop {
        // The patient lies flat until calibrated, then takes up each posture.
        let progress = pipeline.progress();
        if pipeline.is_calibrated() && posture != Some(progress.exercise_index) {
            posture = Some(progress.exercise_index);
            patient.reposition(rest_angle(exercises[progress.exercise_index].pose));
        }

        let angle = match posture {
            Some(ex) if t > 0 => {
                let spec = &exercises[ex];
                let map = scenario.feedback.channels.for_pose(spec.pose);
                let push = device.force(&scenario.device, map.raise) - device.force(&scenario.device, map.lower);
                let obs = Observation {
                    phase: (!progress.complete).then_some(progress.phase),
                    exercise_index: ex,
                    rep: progress.rep,
                    target: spec.target,
                    rest: rest_angle(spec.pose),
                    vibro_active: HapticChannel::ALL.iter().any(|&c| device.vibrating(c, t)),
                    push_force: push,
                };
                patient_step(model, &mut patient, TICK_MS, &obs)
            }
            _ => 0.0,
        };
        if posture.is_some() {
            angle_range = (angle_range.0.min(angle), angle_range.1.max(angle));
        }

        let pose = posture.map(|ex| exercises[ex].pose);
        let pair = scenario
            .rig
            .frames(pose, angle, t)
            .map_err(|e| SimError::InvalidScenario(format!("rig produced an unencodable frame: {e}")))?;
        let mut bytes = Vec::with_capacity(32);
        for f in pair {
            bytes.extend_from_slice(&f.encode().expect("range-checked frame encodes"));
            frames.push(Frame::Filtered(f));
        }
        stream.extend_from_slice(&bytes);
        for entry in pipeline.push_bytes(&bytes) {
            device.receive(&scenario.device, entry.timestamp_ms, &entry.command);
        }

        if pipeline.engine().is_complete() || u64::from(t) >= limit {
            break;
        }
        t += TICK_MS;
        device.advance(&scenario.device, TICK_MS);
    }
    pipeline.finish();

    Ok(SimOutput {
        report: pipeline.report(&scenario.patient_id),
        haptic_log: pipeline.haptic_log().to_vec(),
        frames,
        stream,
        calibration_record: pipeline.calibration_record().map(str::to_string),
        event_log: pipeline.event_log().iter().map(|e| e.to_line()).collect(),
        diagnostics: pipeline.diagnostics().to_vec(),
        angle_range,
        duration_ms: t,
    })
}
