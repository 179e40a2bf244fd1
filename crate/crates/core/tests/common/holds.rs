//! Hand-built hold traces with expected metrics worked out by hand.
//!
//! Every case holds for 10 s starting at 5000 ms. Unless noted, samples are
//! 10 ms apart, each counts until the next one, and a sample is in band
//! when it is within 2 degrees of the hold-start angle.

use rehab_core::kinematics::{ExercisePose, ExerciseSpec, LegPose};
use rehab_core::session::{HoldSample, MovementPhase, PhaseEvent, RepOutcome, RepRecord};

pub const HOLD_START_MS: u32 = 5000;
pub const HOLD_END_MS: u32 = 15_000;

pub struct HoldCase {
    pub name: &'static str,
    pub target: f64,
    pub hold_start_angle: f64,
    pub trace: Vec<HoldSample>,
    pub deviation: f64,
    pub effective_time: f64,
}

fn every(step: u32, f: impl Fn(f64) -> f64) -> Vec<HoldSample> {
    (HOLD_START_MS..HOLD_END_MS)
        .step_by(step as usize)
        .map(|t| HoldSample {
            timestamp_ms: t,
            angle: f(f64::from(t - HOLD_START_MS) / 1000.0),
        })
        .collect()
}

pub fn hold_cases() -> Vec<HoldCase> {
    vec![
        HoldCase {
            name: "perfect",
            target: 30.0,
            hold_start_angle: 30.0,
            trace: every(10, |_| 30.0),
            deviation: 0.0,
            effective_time: 10.0,
        },
        HoldCase {
            // Short of the target but perfectly still.
            name: "steady offset",
            target: 30.0,
            hold_start_angle: 28.0,
            trace: every(10, |_| 28.0),
            deviation: 2.0,
            effective_time: 10.0,
        },
        HoldCase {
            // Leaves the band for good at 7.3 s.
            name: "late exit",
            target: 30.0,
            hold_start_angle: 28.0,
            trace: every(10, |s| if s < 7.3 - 1e-9 { 28.0 } else { 30.5 }),
            deviation: 2.0,
            effective_time: 7.3,
        },
        HoldCase {
            // 0.5 deg/s droop: samples k = 0..=400 are within 2 degrees,
            // 401 samples of 10 ms.
            name: "linear droop",
            target: 30.0,
            hold_start_angle: 30.0,
            trace: every(10, |s| 30.0 - 0.5 * s),
            deviation: 0.0,
            effective_time: 4.01,
        },
        HoldCase {
            // Out of band from 7.0 s to 9.5 s.
            name: "mid excursion",
            target: 45.0,
            hold_start_angle: 44.0,
            trace: every(10, |s| if (7.0 - 1e-9..9.5 - 1e-9).contains(&s) { 40.0 } else { 44.0 }),
            deviation: 1.0,
            effective_time: 7.5,
        },
        HoldCase {
            // Tremor of 1.5 degrees never leaves the band.
            name: "small tremor",
            target: 30.0,
            hold_start_angle: 31.2,
            trace: every(10, |s| 31.2 + 1.5 * (std::f64::consts::TAU * 8.0 * s).sin()),
            deviation: 1.2,
            effective_time: 10.0,
        },
        HoldCase {
            // One second in, one second out, five times.
            name: "square wave",
            target: 90.0,
            hold_start_angle: 92.5,
            trace: every(10, |s| if ((s + 1e-9) as u32).is_multiple_of(2) { 92.5 } else { 96.0 }),
            deviation: 2.5,
            effective_time: 5.0,
        },
        HoldCase {
            // 10 Hz samples; the one at 1.0 s into the hold is out and covers 100 ms.
            name: "sparse sampling",
            target: 30.0,
            hold_start_angle: 30.0,
            trace: every(100, |s| if (s - 1.0).abs() < 1e-9 { 35.0 } else { 30.0 }),
            deviation: 0.0,
            effective_time: 9.9,
        },
        HoldCase {
            // No samples from 3.0 s to 4.0 s; the out-of-band sample at
            // 2.99 s holds until 4.0 s, 1.01 s lost.
            name: "gap after excursion",
            target: 30.0,
            hold_start_angle: 30.0,
            trace: every(10, |s| if (s - 2.99).abs() < 1e-9 { 33.0 } else { 30.0 })
                .into_iter()
                .filter(|h| !(8000..9000).contains(&h.timestamp_ms))
                .collect(),
            deviation: 0.0,
            effective_time: 8.99,
        },
        HoldCase {
            // Alternates between exactly on the band edge (in) and just
            // beyond it (out), every other sample.
            name: "band edge",
            target: 25.0,
            hold_start_angle: 28.0,
            trace: (0..1000u32)
                .map(|k| HoldSample {
                    timestamp_ms: HOLD_START_MS + 10 * k,
                    angle: if k % 2 == 0 { 30.0 } else { 30.01 },
                })
                .collect(),
            deviation: 3.0,
            effective_time: 5.0,
        },
    ]
}

/// A completed repetition carrying the case's hold.
pub fn case_record(case: &HoldCase) -> (RepRecord, ExerciseSpec) {
    let mut spec = ExerciseSpec::new(ExercisePose::StraightLegRaise, 1);
    spec.target = case.target;
    let ev = |phase, s, e| PhaseEvent {
        phase,
        start_ts: s,
        end_ts: e,
        entry_pose: LegPose::flat(s),
    };
    let rec = RepRecord {
        exercise_index: 0,
        rep_index: 0,
        events: vec![
            ev(MovementPhase::Understanding, 0, 1500),
            ev(MovementPhase::Reaching, 1500, 4000),
            ev(MovementPhase::FineTuning, 4000, HOLD_START_MS),
            ev(MovementPhase::Holding, HOLD_START_MS, HOLD_END_MS),
            ev(MovementPhase::Retrieving, HOLD_END_MS, 17_000),
        ],
        rest_angle: Some(0.0),
        hold_start_angle: Some(case.hold_start_angle),
        countdown_completed: true,
        outcome: RepOutcome::Completed,
        hold_trace: case.trace.clone(),
    };
    (rec, spec)
}
