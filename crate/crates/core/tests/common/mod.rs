//! Shared test support: an offline phase labeler that searches the whole
//! trace for each boundary, and synthetic trace generators.
#![allow(dead_code)]

pub mod frames;
pub mod fuzz;
pub mod holds;
pub mod imu;
pub mod sim;
pub mod stats;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rehab_core::kinematics::{ExercisePose, ExerciseSpec, LegPose};
use rehab_core::session::{MovementPhase, PhaseThresholds, RepOutcome, SessionConfig};

pub const DT_MS: u32 = 10;

/// Straight-leg-raise pose whose controlled angle (calf elevation) is `angle`.
pub fn slr_pose(ts: u32, angle: f64) -> LegPose {
    LegPose {
        timestamp_ms: ts,
        knee_flexion: 180.0,
        thigh_elevation: angle,
        calf_elevation: angle,
        knee_angular_velocity: 0.0,
    }
}

pub fn poses(angles: &[f64]) -> Vec<LegPose> {
    angles
        .iter()
        .enumerate()
        .map(|(i, &a)| slr_pose(i as u32 * DT_MS, a))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRep {
    pub events: Vec<(MovementPhase, u32, u32)>,
    pub outcome: RepOutcome,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Labels a single-exercise trace sampled as `(timestamp_ms, angle)`.
///
/// Each boundary is found by scanning forward for the earliest sample that
/// satisfies the rule over its required dwell. A repetition the trace does
/// not finish is omitted.
pub fn oracle_label(samples: &[(u32, f64)], spec: &ExerciseSpec, th: &PhaseThresholds, rep_break_ms: u32) -> Vec<OracleRep> {
    let n = samples.len();
    let ts = |i: usize| samples[i].0;
    let ang = |i: usize| samples[i].1;
    let mut vel = vec![0.0; n];
    for i in 1..n {
        let dt = f64::from(ts(i) - ts(i - 1));
        let raw = (ang(i) - ang(i - 1)) / (dt / 1000.0);
        let g = 1.0 - (-dt / th.velocity_smoothing_ms).exp();
        vel[i] = vel[i - 1] + g * (raw - vel[i - 1]);
    }
    let timeout = (th.reach_timeout * 1000.0).round() as u32;
    let first_at = |t: u32| (0..n).find(|&i| ts(i) >= t);

    let mut reps = Vec::new();
    let Some(mut s0) = first_at(0) else { return reps };
    let mut start = ts(s0);
    for _ in 0..spec.repetitions {
        let Some(after_capture) = first_at(start + th.rest_capture_ms) else { break };
        let mut window: Vec<f64> = (s0..after_capture).map(ang).collect();
        let rest = if window.is_empty() { ang(after_capture) } else { median(&mut window) };
        let timed_out_at = (s0..n).find(|&i| ts(i) - start >= timeout);
        let dir = (spec.target - rest).signum();
        let moving = |i: usize| (ang(i) - rest).abs() > th.d_start && vel[i] * dir > th.v_start;

        // Earliest confirmation of a sustained start; the boundary is the run start.
        let reach = (s0..n).find_map(|k| {
            if !moving(k) {
                return None;
            }
            let mut r = k;
            while r > s0 && moving(r - 1) {
                r -= 1;
            }
            (ts(k) - ts(r) >= th.start_dwell_ms).then_some((r, k))
        });
        let end_timed_out = |reps: &mut Vec<OracleRep>, events: Vec<(MovementPhase, u32, u32)>, at: usize| {
            reps.push(OracleRep {
                events,
                outcome: RepOutcome::TimedOut,
            });
            ts(at)
        };

        let mut events = Vec::new();
        let rep_end: u32;
        match (reach, timed_out_at) {
            (Some((_, k)), Some(t)) if t <= k => {
                events.push((MovementPhase::Understanding, start, ts(t)));
                rep_end = end_timed_out(&mut reps, events, t);
            }
            (None, Some(t)) => {
                events.push((MovementPhase::Understanding, start, ts(t)));
                rep_end = end_timed_out(&mut reps, events, t);
            }
            (None, None) => break,
            (Some((r, _)), _) => {
                events.push((MovementPhase::Understanding, start, ts(r)));
                let ft = (r..n).find(|&i| (ang(i) - spec.target).abs() <= spec.enter_band);
                let timed = |from: usize, to: Option<usize>| {
                    timed_out_at.filter(|&t| t >= from && to.is_none_or(|x| t <= x))
                };
                if let Some(t) = timed(r, ft) {
                    events.push((MovementPhase::Reaching, ts(r), ts(t)));
                    rep_end = end_timed_out(&mut reps, events, t);
                } else if let Some(f) = ft {
                    events.push((MovementPhase::Reaching, ts(r), ts(f)));
                    let low = |i: usize| vel[i].abs() < th.v_hold;
                    let hold = (f..n).find(|&h| {
                        if !low(h) {
                            return false;
                        }
                        let mut l = h;
                        while l > f && low(l - 1) {
                            l -= 1;
                        }
                        ts(h) - ts(l) >= th.stability_dwell_ms
                    });
                    if let Some(t) = timed(f, hold) {
                        events.push((MovementPhase::FineTuning, ts(f), ts(t)));
                        rep_end = end_timed_out(&mut reps, events, t);
                    } else if let Some(h) = hold {
                        events.push((MovementPhase::FineTuning, ts(f), ts(h)));
                        let end = ts(h) + spec.hold_duration_ms();
                        let Some(e) = first_at(end) else { break };
                        events.push((MovementPhase::Holding, ts(h), end));
                        let Some(back) = (e..n).find(|&i| (ang(i) - rest).abs() <= th.retrieve_band) else {
                            break;
                        };
                        events.push((MovementPhase::Retrieving, end, ts(back)));
                        reps.push(OracleRep {
                            events,
                            outcome: RepOutcome::Completed,
                        });
                        rep_end = ts(back);
                    } else {
                        break;
                    }
                } else {
                    break;
                }
            }
        }
        start = rep_end + rep_break_ms;
        match first_at(start) {
            Some(i) => s0 = i,
            None => break,
        }
    }
    reps
}

/// Parameters of one synthetic repetition.
#[derive(Debug, Clone, Copy)]
pub struct MovementShape {
    pub lead_in_s: f64,
    pub up_speed: f64,
    pub plateau: f64,
    pub plateau_s: f64,
    pub down_speed: f64,
    pub tremor: f64,
    pub noise: f64,
}

impl MovementShape {
    pub fn random(rng: &mut ChaCha8Rng, target: f64, first: bool, malinger: bool) -> Self {
        let plateau = if malinger {
            target * rng.random_range(0.3..0.6)
        } else {
            target + rng.random_range(-2.5..2.5)
        };
        Self {
            lead_in_s: if first { rng.random_range(1.5..3.0) } else { rng.random_range(6.0..8.0) },
            up_speed: rng.random_range(8.0..30.0),
            plateau,
            plateau_s: if malinger { 25.0 } else { rng.random_range(12.5..14.0) },
            down_speed: rng.random_range(8.0..30.0),
            tremor: rng.random_range(0.0..0.02),
            noise: rng.random_range(0.0..0.01),
        }
    }
}

/// Appends a rest → ramp → plateau → ramp-down movement to `out`.
pub fn append_movement(out: &mut Vec<f64>, shape: &MovementShape, rng: &mut ChaCha8Rng) {
    let dt = f64::from(DT_MS) / 1000.0;
    let noise = Normal::new(0.0, shape.noise.max(1e-12)).unwrap();
    let mut clean = vec![0.0; (shape.lead_in_s / dt) as usize];
    let mut a = 0.0;
    while a < shape.plateau {
        a = (a + shape.up_speed * dt).min(shape.plateau);
        clean.push(a);
    }
    for _ in 0..(shape.plateau_s / dt) as usize {
        clean.push(shape.plateau);
    }
    while a > 0.0 {
        a = (a - shape.down_speed * dt).max(0.0);
        clean.push(a);
    }
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let base = out.len();
    for (k, c) in clean.into_iter().enumerate() {
        let t = (base + k) as f64 * dt;
        let wobble = if c != 0.0 { shape.tremor * (std::f64::consts::TAU * 8.0 * t + phase).sin() } else { 0.0 };
        out.push(c + wobble + noise.sample(rng));
    }
}

/// Config used by the randomized segmentation suites: one SLR exercise.
pub fn segmentation_config(reps: u32) -> SessionConfig {
    let mut spec = ExerciseSpec::new(ExercisePose::StraightLegRaise, reps);
    spec.target = 30.0;
    SessionConfig {
        exercises: vec![spec],
        thresholds: PhaseThresholds {
            reach_timeout: 20.0,
            ..PhaseThresholds::default()
        },
        ..SessionConfig::default()
    }
}
