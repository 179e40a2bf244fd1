use std::collections::VecDeque;

use serde::Serialize;

use super::{
    HoldSample, MovementPhase, PhaseEvent, RepOutcome, RepRecord, SessionConfig, SessionError,
};
use crate::kinematics::{smoothed_velocity, ExercisePose, ExerciseSpec, LegPose};

/// Median of a non-empty slice; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    pose: LegPose,
    exercise: usize,
    angle: f64,
    velocity: f64,
}

impl Sample {
    fn ts(&self) -> u32 {
        self.pose.timestamp_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    Idle,
    Understanding,
    Reaching,
    FineTuning { low_since: Option<u32> },
    Holding { start: u32 },
    Retrieving,
    Rest { until: u32 },
    Complete,
}

impl Stage {
    fn phase(self) -> MovementPhase {
        match self {
            Stage::Idle | Stage::Understanding => MovementPhase::Understanding,
            Stage::Reaching => MovementPhase::Reaching,
            Stage::FineTuning { .. } => MovementPhase::FineTuning,
            Stage::Holding { .. } => MovementPhase::Holding,
            Stage::Retrieving => MovementPhase::Retrieving,
            Stage::Rest { .. } | Stage::Complete => MovementPhase::Rest,
        }
    }

    fn in_rep(self) -> bool {
        !matches!(self, Stage::Idle | Stage::Rest { .. } | Stage::Complete)
    }
}

#[derive(Debug, Clone)]
struct ActiveRep {
    rep_index: u32,
    start_ts: u32,
    events: Vec<PhaseEvent>,
    rest_window: Vec<Sample>,
    rest_angle: Option<f64>,
    /// Consecutive samples satisfying the start condition.
    start_run: Vec<Sample>,
    hold_start_angle: Option<f64>,
    hold_trace: Vec<HoldSample>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepOutput {
    /// Phases that ended while processing this sample, in order.
    pub events: Vec<PhaseEvent>,
    /// Repetitions that ended while processing this sample.
    pub completed_reps: Vec<RepRecord>,
    pub countdown_remaining: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionProgress {
    pub exercise_index: usize,
    pub exercise_count: usize,
    pub pose: ExercisePose,
    /// 1-based repetition number.
    pub rep: u32,
    pub repetitions: u32,
    pub phase: MovementPhase,
    pub countdown_remaining: Option<f64>,
    pub complete: bool,
}

/// Deterministic phase state machine over a stream of leg poses.
///
/// Timing comes only from sample timestamps. Start and stability conditions
/// must persist for their dwell times; the Reaching boundary is placed at the
/// first sample of the qualifying run, while Holding starts when stability
/// is confirmed, which is also when the countdown begins.
#[derive(Debug, Clone)]
pub struct Engine {
    config: SessionConfig,
    exercise_index: usize,
    reps_done: u32,
    stage: Stage,
    phase_start: u32,
    phase_entry: LegPose,
    rep: Option<ActiveRep>,
    /// (timestamp, angle, velocity) of the last accepted sample in this exercise.
    last: Option<(u32, f64, f64)>,
    last_ts: Option<u32>,
    first_ts: Option<u32>,
    records: Vec<RepRecord>,
    rest_events: Vec<PhaseEvent>,
    queue: VecDeque<Sample>,
}

impl Engine {
    pub fn new(config: SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        Ok(Self {
            config,
            exercise_index: 0,
            reps_done: 0,
            stage: Stage::Idle,
            phase_start: 0,
            phase_entry: LegPose::flat(0),
            rep: None,
            last: None,
            last_ts: None,
            first_ts: None,
            records: Vec::new(),
            rest_events: Vec::new(),
            queue: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn current_spec(&self) -> &ExerciseSpec {
        &self.config.exercises[self.exercise_index]
    }

    pub fn exercise_index(&self) -> usize {
        self.exercise_index
    }

    pub fn phase(&self) -> MovementPhase {
        self.stage.phase()
    }

    pub fn phase_start_ts(&self) -> u32 {
        self.phase_start
    }

    pub fn is_complete(&self) -> bool {
        self.stage == Stage::Complete
    }

    pub fn records(&self) -> &[RepRecord] {
        &self.records
    }

    pub fn rest_events(&self) -> &[PhaseEvent] {
        &self.rest_events
    }

    pub fn first_timestamp(&self) -> Option<u32> {
        self.first_ts
    }

    pub fn last_timestamp(&self) -> Option<u32> {
        self.last_ts
    }

    /// Rest angle of the repetition in progress, once captured.
    pub fn rest_angle(&self) -> Option<f64> {
        self.rep.as_ref().and_then(|r| r.rest_angle)
    }

    pub fn countdown_remaining(&self) -> Option<f64> {
        match (self.stage, self.last_ts) {
            (Stage::Holding { start }, Some(now)) => {
                let end = start + self.current_spec().hold_duration_ms();
                Some(f64::from(end.saturating_sub(now)) / 1000.0)
            }
            _ => None,
        }
    }

    pub fn progress(&self) -> SessionProgress {
        let spec = self.current_spec();
        SessionProgress {
            exercise_index: self.exercise_index,
            exercise_count: self.config.exercises.len(),
            pose: spec.pose,
            rep: (self.reps_done + 1).min(spec.repetitions),
            repetitions: spec.repetitions,
            phase: self.phase(),
            countdown_remaining: self.countdown_remaining(),
            complete: self.is_complete(),
        }
    }

    /// Advances the machine by one pose sample.
    ///
    /// Out-of-order samples are rejected and leave the state untouched.
    pub fn step(&mut self, pose: &LegPose) -> Result<StepOutput, SessionError> {
        if self.stage == Stage::Complete {
            return Err(SessionError::SessionComplete);
        }
        let ts = pose.timestamp_ms;
        let mut out = StepOutput::default();
        if let Some(last) = self.last_ts {
            if ts <= last {
                return Err(SessionError::OutOfOrderSample { last, got: ts });
            }
            if ts - last > self.config.thresholds.max_gap_ms && self.stage.in_rep() {
                self.end_rep(RepOutcome::Aborted, last, &mut out);
            }
        }
        self.first_ts.get_or_insert(ts);
        self.last_ts = Some(ts);

        let sample = self.make_sample(pose);
        self.queue.push_back(sample);
        while let Some(s) = self.queue.pop_front() {
            self.process(s, &mut out);
        }
        out.countdown_remaining = self.countdown_remaining();
        Ok(out)
    }

    /// Ends the stream: a repetition still in progress is recorded as Aborted.
    pub fn finish(&mut self) -> Option<RepRecord> {
        if !self.stage.in_rep() {
            return None;
        }
        let at = self.last_ts.unwrap_or(self.phase_start);
        let mut out = StepOutput::default();
        self.end_rep(RepOutcome::Aborted, at, &mut out);
        out.completed_reps.pop()
    }

    fn make_sample(&mut self, pose: &LegPose) -> Sample {
        let angle = self.current_spec().controlled().read(pose);
        let ts = pose.timestamp_ms;
        let velocity = match self.last {
            Some((t0, a0, v0)) => smoothed_velocity(
                a0,
                v0,
                t0,
                angle,
                ts,
                self.config.thresholds.velocity_smoothing_ms,
            ),
            None => 0.0,
        };
        self.last = Some((ts, angle, velocity));
        Sample {
            pose: *pose,
            exercise: self.exercise_index,
            angle,
            velocity,
        }
    }

    fn requeue(&mut self, samples: impl DoubleEndedIterator<Item = Sample>) {
        for s in samples.rev() {
            self.queue.push_front(s);
        }
    }

    fn process(&mut self, s: Sample, out: &mut StepOutput) {
        let th = self.config.thresholds.clone();
        let spec = self.current_spec().clone();
        let ts = s.ts();

        if let Stage::Idle = self.stage {
            self.start_rep(ts, s.pose);
        }
        let timed_out = self
            .rep
            .as_ref()
            .is_some_and(|r| ts - r.start_ts >= th.reach_timeout_ms());

        match self.stage {
            Stage::Idle | Stage::Complete => {}
            Stage::Rest { until } => {
                if ts >= until {
                    let event = PhaseEvent {
                        phase: MovementPhase::Rest,
                        start_ts: self.phase_start,
                        end_ts: until,
                        entry_pose: self.phase_entry,
                    };
                    self.rest_events.push(event.clone());
                    out.events.push(event);
                    self.start_rep(until, s.pose);
                    let s = if s.exercise == self.exercise_index {
                        s
                    } else {
                        self.make_sample(&s.pose)
                    };
                    self.queue.push_front(s);
                }
            }
            Stage::Understanding => {
                let rep = self.rep.as_mut().expect("rep active in understanding");
                if rep.rest_angle.is_none() {
                    if ts < rep.start_ts + th.rest_capture_ms {
                        rep.rest_window.push(s);
                        return;
                    }
                    let angles: Vec<f64> = rep.rest_window.iter().map(|x| x.angle).collect();
                    rep.rest_angle = Some(median(&angles).unwrap_or(s.angle));
                    let window = std::mem::take(&mut rep.rest_window);
                    self.queue.push_front(s);
                    self.requeue(window.into_iter());
                    return;
                }
                if timed_out {
                    self.end_rep(RepOutcome::TimedOut, ts, out);
                    self.queue.push_front(s);
                    return;
                }
                let rest = rep.rest_angle.unwrap_or(s.angle);
                let direction = (spec.target - rest).signum();
                let moving =
                    (s.angle - rest).abs() > th.d_start && s.velocity * direction > th.v_start;
                if !moving {
                    rep.start_run.clear();
                    return;
                }
                rep.start_run.push(s);
                let first = rep.start_run[0];
                if ts - first.ts() >= th.start_dwell_ms {
                    let run = std::mem::take(&mut rep.start_run);
                    self.transition(Stage::Reaching, first.ts(), first.pose, out);
                    self.requeue(run.into_iter());
                }
            }
            Stage::Reaching => {
                if timed_out {
                    self.end_rep(RepOutcome::TimedOut, ts, out);
                    self.queue.push_front(s);
                } else if (s.angle - spec.target).abs() <= spec.enter_band {
                    self.transition(Stage::FineTuning { low_since: None }, ts, s.pose, out);
                    self.queue.push_front(s);
                }
            }
            Stage::FineTuning { low_since } => {
                if timed_out {
                    self.end_rep(RepOutcome::TimedOut, ts, out);
                    self.queue.push_front(s);
                    return;
                }
                if s.velocity.abs() >= th.v_hold {
                    self.stage = Stage::FineTuning { low_since: None };
                    return;
                }
                let since = low_since.unwrap_or(ts);
                if ts - since >= th.stability_dwell_ms {
                    self.transition(Stage::Holding { start: ts }, ts, s.pose, out);
                    let rep = self.rep.as_mut().expect("rep active in holding");
                    rep.hold_start_angle = Some(s.angle);
                    rep.hold_trace.push(HoldSample {
                        timestamp_ms: ts,
                        angle: s.angle,
                    });
                } else {
                    self.stage = Stage::FineTuning {
                        low_since: Some(since),
                    };
                }
            }
            Stage::Holding { start } => {
                let end = start + spec.hold_duration_ms();
                if ts >= end {
                    self.transition(Stage::Retrieving, end, s.pose, out);
                    self.queue.push_front(s);
                } else {
                    let rep = self.rep.as_mut().expect("rep active in holding");
                    rep.hold_trace.push(HoldSample {
                        timestamp_ms: ts,
                        angle: s.angle,
                    });
                }
            }
            Stage::Retrieving => {
                let rest = self.rep.as_ref().and_then(|r| r.rest_angle).unwrap_or(0.0);
                if (s.angle - rest).abs() <= th.retrieve_band {
                    self.end_rep(RepOutcome::Completed, ts, out);
                    self.queue.push_front(s);
                }
            }
        }
    }

    fn start_rep(&mut self, at: u32, pose: LegPose) {
        self.rep = Some(ActiveRep {
            rep_index: self.reps_done,
            start_ts: at,
            events: Vec::new(),
            rest_window: Vec::new(),
            rest_angle: None,
            start_run: Vec::new(),
            hold_start_angle: None,
            hold_trace: Vec::new(),
        });
        self.stage = Stage::Understanding;
        self.phase_start = at;
        self.phase_entry = pose;
    }

    fn close_phase(&mut self, at: u32, out: &mut StepOutput) {
        let event = PhaseEvent {
            phase: self.stage.phase(),
            start_ts: self.phase_start,
            end_ts: at,
            entry_pose: self.phase_entry,
        };
        if let Some(rep) = self.rep.as_mut() {
            rep.events.push(event.clone());
        }
        out.events.push(event);
    }

    fn transition(&mut self, to: Stage, at: u32, entry: LegPose, out: &mut StepOutput) {
        self.close_phase(at, out);
        self.stage = to;
        self.phase_start = at;
        self.phase_entry = entry;
    }

    fn end_rep(&mut self, outcome: RepOutcome, at: u32, out: &mut StepOutput) {
        self.close_phase(at, out);
        let rep = self.rep.take().expect("end_rep with an active rep");
        // Holding only ever ends by countdown, so Retrieving implies it finished.
        let countdown_completed = rep
            .events
            .iter()
            .any(|e| e.phase == MovementPhase::Retrieving);
        let record = RepRecord {
            exercise_index: self.exercise_index,
            rep_index: rep.rep_index,
            rest_angle: rep.rest_angle,
            hold_start_angle: rep.hold_start_angle,
            countdown_completed,
            outcome,
            hold_trace: rep.hold_trace,
            events: rep.events,
        };
        self.records.push(record.clone());
        out.completed_reps.push(record);

        self.reps_done += 1;
        let entry = self.last_pose_hint();
        if self.reps_done >= self.current_spec().repetitions {
            if self.exercise_index + 1 < self.config.exercises.len() {
                self.exercise_index += 1;
                self.reps_done = 0;
                self.last = None;
                self.stage = Stage::Rest {
                    until: at + self.config.inter_pose_break_ms(),
                };
            } else {
                self.stage = Stage::Complete;
            }
        } else {
            self.stage = Stage::Rest {
                until: at + self.config.rep_break_ms(),
            };
        }
        self.phase_start = at;
        self.phase_entry = entry;
    }

    fn last_pose_hint(&self) -> LegPose {
        self.queue
            .front()
            .map(|s| s.pose)
            .unwrap_or(self.phase_entry)
    }
}
