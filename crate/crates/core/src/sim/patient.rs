use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::session::MovementPhase;

/// Synthetic patient: first-order approach to an intended angle after a
/// reaction delay, with tremor, hold fatigue and responses to haptics.
/// Times in seconds, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatientModel {
    pub reaction_delay: f64,
    pub time_constant: f64,
    pub tremor_amplitude: f64,
    pub tremor_frequency: f64,
    /// Drift toward rest while holding, deg/s.
    pub fatigue_droop: f64,
    /// Fraction of the movement toward the target actually attempted.
    pub malingering_factor: f64,
    pub warning_response_latency: f64,
    /// Relative per-repetition spread of reaction delay and time constant.
    pub variability: f64,
    /// Angular drift per newton of net airbag force, deg/s.
    pub pneumatic_gain: f64,
}

impl Default for PatientModel {
    fn default() -> Self {
        Self {
            reaction_delay: 0.8,
            time_constant: 1.2,
            tremor_amplitude: 0.05,
            tremor_frequency: 8.0,
            fatigue_droop: 0.1,
            malingering_factor: 1.0,
            warning_response_latency: 0.4,
            variability: 0.15,
            pneumatic_gain: 0.05,
        }
    }
}

impl PatientModel {
    /// No tremor, droop or per-rep spread.
    pub fn noiseless() -> Self {
        Self {
            tremor_amplitude: 0.0,
            fatigue_droop: 0.0,
            variability: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("reaction_delay", self.reaction_delay),
            ("tremor_amplitude", self.tremor_amplitude),
            ("tremor_frequency", self.tremor_frequency),
            ("fatigue_droop", self.fatigue_droop),
            ("warning_response_latency", self.warning_response_latency),
            ("variability", self.variability),
            ("pneumatic_gain", self.pneumatic_gain),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("patient.{name} must be non-negative, got {v}"));
            }
        }
        if !(self.time_constant > 0.0 && self.time_constant.is_finite()) {
            return Err(format!("patient.time_constant must be positive, got {}", self.time_constant));
        }
        if !(self.malingering_factor > 0.0 && self.malingering_factor <= 1.0) {
            return Err(format!(
                "patient.malingering_factor must lie in (0, 1], got {}",
                self.malingering_factor
            ));
        }
        Ok(())
    }
}

/// What the patient perceives at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Phase shown by the guidance display; `None` before the session starts.
    pub phase: Option<MovementPhase>,
    pub exercise_index: usize,
    /// 1-based repetition shown by the display.
    pub rep: u32,
    pub target: f64,
    pub rest: f64,
    pub vibro_active: bool,
    /// Net airbag force along the direction that raises the controlled angle, N.
    pub push_force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Switch {
    Engage,
    Relax,
}

#[derive(Debug, Clone)]
pub struct PatientState {
    seed: u64,
    t_ms: u64,
    angle: f64,
    intent: f64,
    rest: f64,
    goal: f64,
    engaged: bool,
    pending: Option<(u64, Switch)>,
    retarget_at: Option<u64>,
    tremor_phase: f64,
    delay_ms: u64,
    tau: f64,
    last_phase: Option<MovementPhase>,
    last_vibro: bool,
}

fn secs_to_ms(s: f64) -> u64 {
    (s * 1000.0).round() as u64
}

impl PatientState {
    pub fn new(model: &PatientModel, seed: u64, rest: f64) -> Self {
        Self {
            seed,
            t_ms: 0,
            angle: rest,
            intent: rest,
            rest,
            goal: rest,
            engaged: false,
            pending: None,
            retarget_at: None,
            tremor_phase: 0.0,
            delay_ms: secs_to_ms(model.reaction_delay),
            tau: model.time_constant,
            last_phase: None,
            last_vibro: false,
        }
    }

    /// Underlying angle without tremor.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn is_engaged(&self) -> bool {
        self.engaged
    }

    /// Instantly moves to a new posture and relaxes there.
    pub fn reposition(&mut self, rest: f64) {
        self.angle = rest;
        self.intent = rest;
        self.rest = rest;
        self.goal = rest;
        self.engaged = false;
        self.pending = None;
        self.retarget_at = None;
    }

    /// Per-rep variation, drawn from a stream keyed by the rep so that runs
    /// differing only in feedback stay aligned.
    fn draw_rep(&mut self, model: &PatientModel, exercise: usize, rep: u32) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((exercise as u64) << 32) | u64::from(rep));
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let delay = (model.reaction_delay * (1.0 + model.variability * n1)).max(0.1 * model.reaction_delay);
        self.delay_ms = secs_to_ms(delay);
        self.tau = (model.time_constant * (1.0 + model.variability * n2)).max(0.2 * model.time_constant);
        self.tremor_phase = phase;
    }
}

/// Advances the patient by `dt_ms` and returns the displayed controlled
/// angle (including tremor) at the new time.
pub fn patient_step(model: &PatientModel, state: &mut PatientState, dt_ms: u32, obs: &Observation) -> f64 {
    let dt = f64::from(dt_ms) / 1000.0;
    // Cues are perceived at the start of the tick, when they were displayed.
    let seen = state.t_ms;
    if obs.phase != state.last_phase {
        match obs.phase {
            Some(MovementPhase::Understanding) => {
                state.draw_rep(model, obs.exercise_index, obs.rep);
                state.rest = obs.rest;
                state.goal = obs.rest + model.malingering_factor * (obs.target - obs.rest);
                state.pending = Some((seen + state.delay_ms, Switch::Engage));
            }
            Some(MovementPhase::Retrieving) | Some(MovementPhase::Rest) => {
                state.pending = Some((seen + state.delay_ms, Switch::Relax));
                state.retarget_at = None;
            }
            _ => {}
        }
        state.last_phase = obs.phase;
    }
    if obs.vibro_active && !state.last_vibro && state.engaged && state.retarget_at.is_none() {
        state.retarget_at = Some(seen + secs_to_ms(model.warning_response_latency));
    }
    state.last_vibro = obs.vibro_active;

    let direction = (state.goal - state.rest).signum();
    if state.engaged && obs.phase == Some(MovementPhase::Holding) {
        state.intent -= direction * model.fatigue_droop * dt;
    }
    state.angle += (state.intent - state.angle) * (1.0 - (-dt / state.tau).exp());
    state.angle += model.pneumatic_gain * obs.push_force * dt;
    state.t_ms += u64::from(dt_ms);
    let now = state.t_ms;

    if let Some((due, switch)) = state.pending {
        if now >= due {
            state.pending = None;
            match switch {
                Switch::Engage => {
                    state.engaged = true;
                    state.intent = state.goal;
                }
                Switch::Relax => {
                    state.engaged = false;
                    state.intent = state.rest;
                }
            }
        }
    }
    if let Some(due) = state.retarget_at {
        if now >= due {
            state.retarget_at = None;
            if state.engaged {
                state.intent = state.goal;
            }
        }
    }

    let tremor = if state.engaged {
        let t = now as f64 / 1000.0;
        model.tremor_amplitude * (std::f64::consts::TAU * model.tremor_frequency * t + state.tremor_phase).sin()
    } else {
        0.0
    };
    state.angle + tremor
}
