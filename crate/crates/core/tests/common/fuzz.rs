//! Randomized pose streams for whole-pipeline properties.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rehab_core::feedback::FeedbackPolicy;
use rehab_core::kinematics::{ControlledAngle, ExercisePose, ExerciseSpec, LegPose};
use rehab_core::pipeline::PipelineConfig;
use rehab_core::session::{PhaseThresholds, SessionConfig};

/// A pose whose controlled quantity for `controlled` equals `angle`.
pub fn pose_with(ts: u32, controlled: ControlledAngle, angle: f64) -> LegPose {
    let mut p = LegPose::flat(ts);
    match controlled {
        ControlledAngle::KneeFlexion => p.knee_flexion = angle,
        ControlledAngle::KneeBend => p.knee_flexion = 180.0 - angle,
        ControlledAngle::ThighElevation => {
            p.thigh_elevation = angle;
            p.calf_elevation = angle;
        }
        ControlledAngle::CalfElevation => {
            p.thigh_elevation = angle;
            p.calf_elevation = angle;
        }
    }
    p
}

fn rest_of(pose: ExercisePose) -> f64 {
    match pose {
        ExercisePose::KneeExtension => 90.0,
        _ => 0.0,
    }
}

/// A short random session config and a pose stream that mixes plausible
/// repetitions with jumps, drifts, tremor and sample gaps.
pub fn fuzz_session(rng: &mut ChaCha8Rng) -> (PipelineConfig, Vec<LegPose>) {
    let pose = ExercisePose::ALL[rng.random_range(0..4)];
    let mut spec = ExerciseSpec::new(pose, rng.random_range(1..=2));
    spec.hold_duration = rng.random_range(1.0..4.0);
    let session = SessionConfig {
        exercises: vec![spec.clone()],
        inter_pose_break: 1.0,
        rep_break: 1.0,
        thresholds: PhaseThresholds {
            reach_timeout: rng.random_range(4.0..10.0),
            ..PhaseThresholds::default()
        },
    };
    let feedback = FeedbackPolicy {
        vibro_enabled: rng.random_bool(0.8),
        pneumatic_enabled: rng.random_bool(0.8),
        fine_tuning_pneumatic: rng.random_bool(0.5),
        ..FeedbackPolicy::default()
    };
    let controlled = spec.controlled();
    let rest = rest_of(pose);
    let target = spec.target;

    let mut poses = Vec::new();
    let mut ts = 0u32;
    let mut angle = rest;
    let samples = rng.random_range(1500..3000);
    while poses.len() < samples {
        // Pick a goal and a way of getting there.
        let goal = match rng.random_range(0..5) {
            0 => rest,
            1 | 2 => target + rng.random_range(-4.0..4.0),
            3 => target + rng.random_range(-15.0..15.0),
            _ => rest + (target - rest) * rng.random_range(0.0..1.2),
        };
        let steps = rng.random_range(20..400);
        let jump = rng.random_bool(0.1);
        let rate = rng.random_range(0.01..0.2);
        let tremor = rng.random_range(0.0..3.0);
        for k in 0..steps {
            ts += if rng.random_bool(0.002) { rng.random_range(100..900) } else { 10 };
            angle = if jump { goal } else { angle + (goal - angle) * rate };
            let wobble = tremor * (f64::from(k) * 0.5).sin();
            poses.push(pose_with(ts, controlled, angle + wobble));
        }
    }
    (PipelineConfig { session, feedback }, poses)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GatingStats {
    pub commands: usize,
    pub vibro: usize,
    pub inflate: usize,
    pub rep_ends: usize,
}

/// Drives a pipeline pose by pose and checks every transmitted command
/// against the phase and deviation at the time it was sent. Actuator state
/// is rebuilt from the command log alone.
pub fn check_gating(config: &PipelineConfig, poses: &[LegPose]) -> Result<GatingStats, String> {
    use rehab_core::kinematics::deviation;
    use rehab_core::pipeline::Pipeline;
    use rehab_core::protocol::ActuatorKind;
    use rehab_core::session::MovementPhase;

    let mut p = Pipeline::new(config.clone())?;
    let spec = config.session.exercises[0].clone();
    let mut inflated = [false; 4];
    let mut vibro_until = [0u64; 4];
    let mut stats = GatingStats::default();
    let mut reps = 0;
    for pose in poses {
        let sent = p.push_pose(*pose);
        let phase = (!p.engine().is_complete()).then(|| p.engine().phase());
        let dev = deviation(pose, &spec);
        for e in &sent {
            let c = e.command;
            let i = c.channel.index();
            stats.commands += 1;
            match c.actuator {
                ActuatorKind::Vibro => {
                    stats.vibro += 1;
                    if phase != Some(MovementPhase::Holding) {
                        return Err(format!("vibro at {} ms in {phase:?}", e.timestamp_ms));
                    }
                    if dev.abs() <= 2.0 {
                        return Err(format!("vibro at {} ms with deviation {dev}", e.timestamp_ms));
                    }
                    vibro_until[i] = u64::from(e.timestamp_ms) + u64::from(c.duration_ms);
                }
                ActuatorKind::PumpInflate => {
                    stats.inflate += 1;
                    if !matches!(phase, Some(MovementPhase::Reaching | MovementPhase::FineTuning)) {
                        return Err(format!("inflate at {} ms in {phase:?}", e.timestamp_ms));
                    }
                    inflated[i] = true;
                }
                ActuatorKind::PumpDeflate => inflated[i] = false,
            }
        }
        let now = p.engine().records().len();
        if now > reps {
            reps = now;
            stats.rep_ends += 1;
            let t = u64::from(pose.timestamp_ms);
            if inflated.iter().any(|&x| x) || vibro_until.iter().any(|&u| u > t) {
                return Err(format!("actuators left on at rep end {t} ms"));
            }
        }
    }
    Ok(stats)
}
