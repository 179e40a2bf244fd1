//! Summative session report.
//!
//! Field order is fixed by declaration order, per-rep rows keep full float
//! precision and aggregates are printed with two decimals.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{compute_rep_metrics, RepMetrics};
use crate::kinematics::ExerciseSpec;
use crate::session::{RepOutcome, RepRecord};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A number serialized with exactly two decimals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed2(pub f64);

impl Serialize for Fixed2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = serde_json::value::RawValue::from_string(format!("{:.2}", self.0))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub completed: u32,
    pub timed_out: u32,
    pub aborted: u32,
}

impl OutcomeCounts {
    fn add(&mut self, o: RepOutcome) {
        match o {
            RepOutcome::Completed => self.completed += 1,
            RepOutcome::TimedOut => self.timed_out += 1,
            RepOutcome::Aborted => self.aborted += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub patient_id: String,
    pub engine_version: String,
    pub start_ms: Option<u32>,
    pub end_ms: Option<u32>,
    pub total_duration_s: f64,
    pub outcomes: OutcomeCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExerciseEcho {
    pub index: usize,
    pub pose: &'static str,
    pub controlled_angle: &'static str,
    pub target: f64,
    pub enter_band: f64,
    pub hold_band: f64,
    pub hold_duration: f64,
    pub repetitions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub phase: &'static str,
    pub start_ms: u32,
    pub end_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepRow {
    pub exercise_index: usize,
    pub pose: &'static str,
    /// 1-based within the exercise.
    pub rep: u32,
    pub outcome: RepOutcome,
    pub phases: Vec<PhaseRow>,
    pub rest_angle: Option<f64>,
    pub hold_start_angle: Option<f64>,
    pub countdown_completed: bool,
    pub understanding_time: Option<f64>,
    pub angle_deviation: Option<f64>,
    pub effective_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricStats {
    pub mean: Option<Fixed2>,
    /// Sample standard deviation; absent below two values.
    pub sd: Option<Fixed2>,
}

impl MetricStats {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / n);
        let sd = mean.filter(|_| values.len() >= 2).map(|m| {
            (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        });
        Self {
            mean: mean.map(Fixed2),
            sd: sd.map(Fixed2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub exercise_index: usize,
    pub pose: &'static str,
    pub completed_reps: usize,
    /// From the first repetition of the pose only.
    pub understanding_time: Option<Fixed2>,
    pub angle_deviation: MetricStats,
    pub effective_time: MetricStats,
    pub outcomes: OutcomeCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub schema_version: u32,
    pub session: SessionInfo,
    pub exercises: Vec<ExerciseEcho>,
    pub reps: Vec<RepRow>,
    pub aggregates: Vec<AggregateRow>,
    pub config_hash: String,
}

impl SessionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Identity and timing of the session being reported.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportContext {
    pub session_id: String,
    pub patient_id: String,
    pub config_hash: String,
    pub start_ms: Option<u32>,
    pub end_ms: Option<u32>,
}

/// First 16 hex digits of SHA-256 over the canonical JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&bytes)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn build_report(records: &[RepRecord], exercises: &[ExerciseSpec], ctx: &ReportContext) -> SessionReport {
    let mut outcomes = OutcomeCounts::default();
    let mut reps = Vec::with_capacity(records.len());
    let mut per_exercise: Vec<(OutcomeCounts, Vec<(u32, RepMetrics)>)> =
        vec![(OutcomeCounts::default(), Vec::new()); exercises.len()];

    for rec in records {
        outcomes.add(rec.outcome);
        let spec = &exercises[rec.exercise_index];
        let metrics = compute_rep_metrics(rec, spec).ok();
        let slot = &mut per_exercise[rec.exercise_index];
        slot.0.add(rec.outcome);
        if let Some(m) = metrics {
            slot.1.push((rec.rep_index, m));
        }
        reps.push(RepRow {
            exercise_index: rec.exercise_index,
            pose: spec.pose.name(),
            rep: rec.rep_index + 1,
            outcome: rec.outcome,
            phases: rec
                .events
                .iter()
                .map(|e| PhaseRow {
                    phase: e.phase.name(),
                    start_ms: e.start_ts,
                    end_ms: e.end_ts,
                })
                .collect(),
            rest_angle: rec.rest_angle,
            hold_start_angle: rec.hold_start_angle,
            countdown_completed: rec.countdown_completed,
            understanding_time: metrics.map(|m| m.understanding_time),
            angle_deviation: metrics.map(|m| m.angle_deviation),
            effective_time: metrics.map(|m| m.effective_time),
        });
    }

    let aggregates = per_exercise
        .iter()
        .enumerate()
        .filter(|(_, (_, ms))| !ms.is_empty())
        .map(|(i, (counts, ms))| {
            let dev: Vec<f64> = ms.iter().map(|(_, m)| m.angle_deviation).collect();
            let eff: Vec<f64> = ms.iter().map(|(_, m)| m.effective_time).collect();
            AggregateRow {
                exercise_index: i,
                pose: exercises[i].pose.name(),
                completed_reps: ms.len(),
                understanding_time: ms
                    .iter()
                    .find(|(r, _)| *r == 0)
                    .map(|(_, m)| Fixed2(m.understanding_time)),
                angle_deviation: MetricStats::of(&dev),
                effective_time: MetricStats::of(&eff),
                outcomes: *counts,
            }
        })
        .collect();

    let total_ms = match (ctx.start_ms, ctx.end_ms) {
        (Some(a), Some(b)) => b.saturating_sub(a),
        _ => 0,
    };
    SessionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        session: SessionInfo {
            session_id: ctx.session_id.clone(),
            patient_id: ctx.patient_id.clone(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            start_ms: ctx.start_ms,
            end_ms: ctx.end_ms,
            total_duration_s: f64::from(total_ms) / 1000.0,
            outcomes,
        },
        exercises: exercises
            .iter()
            .enumerate()
            .map(|(index, e)| ExerciseEcho {
                index,
                pose: e.pose.name(),
                controlled_angle: e.controlled().name(),
                target: e.target,
                enter_band: e.enter_band,
                hold_band: e.hold_band,
                hold_duration: e.hold_duration,
                repetitions: e.repetitions,
            })
            .collect(),
        reps,
        aggregates,
        config_hash: ctx.config_hash.clone(),
    }
}

/// Human-readable table of the aggregates.
pub fn render_summary(report: &SessionReport) -> String {
    let f = |v: Option<Fixed2>| v.map_or("-".to_string(), |x| format!("{:.2}", x.0));
    let o = &report.session.outcomes;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "session {} patient {} ({:.1} s): {} completed, {} timed out, {} aborted",
        report.session.session_id,
        report.session.patient_id,
        report.session.total_duration_s,
        o.completed,
        o.timed_out,
        o.aborted
    );
    let _ = writeln!(
        out,
        "{:<26} {:>4} {:>8} {:>14} {:>14}",
        "pose", "reps", "underst", "deviation", "effective"
    );
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "{:<26} {:>4} {:>8} {:>14} {:>14}",
            a.pose,
            a.completed_reps,
            f(a.understanding_time),
            format!("{} ± {}", f(a.angle_deviation.mean), f(a.angle_deviation.sd)),
            format!("{} ± {}", f(a.effective_time.mean), f(a.effective_time.sd)),
        );
    }
    out
}
