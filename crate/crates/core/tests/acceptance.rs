//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (bypassing output capture) before asserting.

mod common;

use std::io::Write;
use std::time::Instant;

use common::fuzz::{check_gating, fuzz_session};
use common::holds::{case_record, hold_cases};
use common::imu::{angle_diff, sample_imu, ImuNoise, Trajectory};
use common::sim::{mean_of, paired_effective_times};
use common::stats::{continuous_fixture, enumerate, integer_fixture};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rehab_core::kinematics::{OrientationState, DEFAULT_ALPHA};
use rehab_core::metrics::{compute_rep_metrics, wilcoxon_signed_rank, wilcoxon_with_method, WilcoxonMethod};
use rehab_core::pipeline::replay;
use rehab_core::protocol::{Frame, SensorId, StreamDecoder};
use rehab_core::session::{Engine, RepOutcome, SessionError};
use rehab_core::sim::{format_trace, parse_trace, run_closed_loop, PatientModel, Scenario};

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let line = format!("\n[{}] {n}. {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_1_orientation_accuracy() {
    let started = Instant::now();
    let noise = ImuNoise {
        gyro_bias_dps: 0.5,
        gyro_rms_dps: 0.2,
        accel_rms_mg: 20.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n = 20 * 60 * 100;
    let mut within = 0usize;
    let mut total = 0usize;
    let mut worst: f64 = 0.0;
    for sensor in SensorId::ALL {
        let traj = Trajectory::random(&mut rng);
        let samples = sample_imu(&traj, sensor, 10, n, noise, &mut rng);
        let bytes: Vec<u8> = samples.iter().flat_map(|(f, _)| f.encode().unwrap()).collect();
        let frames = StreamDecoder::new().push(&bytes).frames;
        assert_eq!(frames.len(), n);
        let mut filter = OrientationState::new(DEFAULT_ALPHA);
        for frame in &frames {
            let Frame::Raw(raw) = frame else { unreachable!() };
            filter.update(raw).unwrap();
            let (r, p, _) = filter.euler_degrees();
            let (tr, tp, _) = traj.euler(f64::from(raw.timestamp_ms) / 1000.0);
            for err in [angle_diff(r, tr).abs(), angle_diff(p, tp).abs()] {
                worst = worst.max(err);
                within += usize::from(err <= 2.0);
                total += 1;
            }
        }
    }
    let frac = within as f64 / total as f64;
    let secs = started.elapsed().as_secs_f64();
    verdict(
        1,
        "orientation accuracy",
        frac >= 0.99 && secs < 10.0,
        format!("{:.3}% of pitch/roll errors <= 2 deg (worst {worst:.2}), 2 x 20 min in {secs:.2} s", 100.0 * frac),
    );
}

#[test]
fn criterion_2_segmentation_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut boundaries, mut close, mut order_violations, mut count_mismatch, mut movements) = (0, 0, 0, 0, 0);
    while movements < 500 {
        let reps = rng.random_range(1..=3u32);
        let config = segmentation_config(reps);
        let mut angles = Vec::new();
        for k in 0..reps {
            let malinger = rng.random_bool(0.1);
            let shape = MovementShape::random(&mut rng, 30.0, k == 0, malinger);
            append_movement(&mut angles, &shape, &mut rng);
        }
        movements += reps;
        angles.extend(std::iter::repeat_n(0.0, 700));

        let mut engine = Engine::new(config.clone()).unwrap();
        for p in poses(&angles) {
            match engine.step(&p) {
                Ok(_) | Err(SessionError::SessionComplete) => {}
                Err(e) => panic!("{e}"),
            }
        }
        let samples: Vec<(u32, f64)> = angles.iter().enumerate().map(|(i, &a)| (i as u32 * DT_MS, a)).collect();
        let oracle = oracle_label(&samples, &config.exercises[0], &config.thresholds, config.rep_break_ms());
        let got = engine.records();
        if got.len() != oracle.len()
            || got.iter().zip(&oracle).any(|(g, o)| g.outcome != o.outcome)
        {
            count_mismatch += 1;
        }
        for (g, o) in got.iter().zip(&oracle) {
            let mut last = None;
            for e in &g.events {
                let ord = e.phase.order();
                if ord.is_none() || last.is_some_and(|l: u8| ord != Some(l + 1)) {
                    order_violations += 1;
                }
                last = ord;
            }
            for (i, want) in o.events.iter().enumerate() {
                boundaries += 2;
                match g.events.get(i) {
                    Some(e) if e.phase == want.0 => {
                        close += usize::from(e.start_ts.abs_diff(want.1) <= 200);
                        close += usize::from(e.end_ts.abs_diff(want.2) <= 200);
                    }
                    _ => {}
                }
            }
        }
    }
    let frac = close as f64 / boundaries as f64;
    let secs = started.elapsed().as_secs_f64();
    verdict(
        2,
        "segmentation oracle",
        frac >= 0.95 && order_violations == 0 && count_mismatch == 0 && secs < 30.0,
        format!(
            "{movements} movements, {:.2}% of {boundaries} boundaries within 200 ms, {order_violations} order violations, {count_mismatch} rep-count mismatches, {secs:.2} s",
            100.0 * frac
        ),
    );
}

#[test]
fn criterion_3_metric_exactness() {
    let mut bad = Vec::new();
    let mut perfect_exact = false;
    let cases = hold_cases();
    for case in &cases {
        let (rec, spec) = case_record(case);
        let m = compute_rep_metrics(&rec, &spec).unwrap();
        if (m.angle_deviation - case.deviation).abs() > 0.01 || (m.effective_time - case.effective_time).abs() > 0.01 {
            bad.push(format!("{} ({:.3}, {:.3})", case.name, m.angle_deviation, m.effective_time));
        }
        if case.name == "perfect" {
            perfect_exact = m.angle_deviation == 0.0 && m.effective_time == 10.0;
        }
    }
    verdict(
        3,
        "metric exactness",
        bad.is_empty() && perfect_exact && cases.len() == 10,
        format!("{} hold traces, mismatches {bad:?}, perfect hold exact: {perfect_exact}", cases.len()),
    );
}

#[test]
fn criterion_4_haptic_gating() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut failures = Vec::new();
    let (mut vibro, mut inflate, mut rep_ends) = (0, 0, 0);
    for case in 0..1000 {
        let (config, poses) = fuzz_session(&mut rng);
        match check_gating(&config, &poses) {
            Ok(s) => {
                vibro += s.vibro;
                inflate += s.inflate;
                rep_ends += s.rep_ends;
            }
            Err(e) => failures.push(format!("trace {case}: {e}")),
        }
    }
    verdict(
        4,
        "haptic gating",
        failures.is_empty() && vibro > 0 && inflate > 0,
        format!(
            "1000 fuzzed traces, {vibro} vibro / {inflate} inflate commands, {rep_ends} rep ends checked, violations: {}",
            failures.first().map_or("none".to_string(), |f| format!("{} (first: {f})", failures.len()))
        ),
    );
}

#[test]
fn criterion_5_wilcoxon() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut exact_bad, mut checked, mut sym_bad, mut scale_bad) = (0, 0, 0, 0);
    let mut fixtures = Vec::new();
    while checked < 1000 {
        let n = rng.random_range(3..=12);
        let (a, b) = if rng.random_bool(0.5) {
            integer_fixture(&mut rng, n, 6)
        } else {
            continuous_fixture(&mut rng, n)
        };
        let Ok(r) = wilcoxon_with_method(&a, &b, WilcoxonMethod::Exact) else {
            continue;
        };
        checked += 1;
        let e = enumerate(&a, &b);
        if (r.p_value - e.p_value).abs() > 1e-12 || r.w_plus != e.w_plus || r.w_minus != e.w_minus {
            exact_bad += 1;
        }
        fixtures.push((a, b));
    }
    let mut approx_worst: f64 = 0.0;
    for _ in 0..10 {
        let (a, b) = continuous_fixture(&mut rng, 20);
        let r = wilcoxon_with_method(&a, &b, WilcoxonMethod::NormalApprox).unwrap();
        approx_worst = approx_worst.max((r.p_value - enumerate(&a, &b).p_value).abs());
        fixtures.push((a, b));
    }
    for (a, b) in &fixtures {
        let r = wilcoxon_signed_rank(a, b).unwrap();
        let s = wilcoxon_signed_rank(b, a).unwrap();
        if s.p_value != r.p_value || s.w_plus != r.w_minus || s.w_minus != r.w_plus {
            sym_bad += 1;
        }
        // Powers of two keep the differences exact, so ties survive scaling.
        for c in [0.125, 2.0, 64.0] {
            let sa: Vec<f64> = a.iter().map(|v| v * c).collect();
            let sb: Vec<f64> = b.iter().map(|v| v * c).collect();
            if wilcoxon_signed_rank(&sa, &sb).unwrap() != r {
                scale_bad += 1;
            }
        }
    }
    verdict(
        5,
        "wilcoxon correctness",
        exact_bad == 0 && approx_worst <= 0.01 && sym_bad == 0 && scale_bad == 0,
        format!(
            "{checked} exact fixtures n<=12, {exact_bad} off enumeration; approx at n=20 worst |dp| {approx_worst:.4}; {sym_bad} antisymmetry and {scale_bad} scaling failures over {} fixtures",
            fixtures.len()
        ),
    );
}

#[test]
fn criterion_6_protocol_robustness() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let frames: Vec<Frame> = (0..100_000).map(|_| common::frames::random_frame(&mut rng)).collect();
    let bytes: Vec<u8> = frames.iter().flat_map(|f| f.encode().unwrap()).collect();
    let decoded = StreamDecoder::new().push(&bytes).frames;
    let round_trip = decoded == frames;

    let noise: Vec<u8> = (0..1_000_000).map(|_| rng.random()).collect();
    let survived = std::panic::catch_unwind(|| {
        let mut dec = StreamDecoder::new();
        let mut found = 0;
        for chunk in noise.chunks(4096) {
            found += dec.push(chunk).frames.len();
        }
        dec.finish();
        found
    });

    let mut recovered = 0;
    for _ in 0..100 {
        let junk = rng.random_range(1..=64);
        let mut stream: Vec<u8> = (0..junk).map(|_| rng.random()).collect();
        let f = common::frames::random_frame(&mut rng);
        stream.extend(f.encode().unwrap());
        let mut dec = StreamDecoder::new();
        let mut out = dec.push(&stream).frames;
        out.extend(dec.push(&common::frames::random_frame(&mut rng).encode().unwrap()).frames);
        recovered += usize::from(out.contains(&f));
    }
    verdict(
        6,
        "protocol robustness",
        round_trip && survived.is_ok() && recovered == 100,
        format!(
            "1e5 frame round trip: {round_trip}; 1e6 random bytes: {}; recovery after <=64 junk bytes: {recovered}/100",
            match &survived {
                Ok(n) => format!("no abort ({n} spurious frames)"),
                Err(_) => "panicked".into(),
            }
        ),
    );
}

#[test]
fn criterion_7_determinism() {
    let sc = Scenario {
        seed: 7,
        ..Scenario::default()
    };
    let run = || {
        let out = run_closed_loop(&sc).unwrap();
        let text = format_trace(&out.trace(&sc));
        let (trace, _) = parse_trace(&text);
        let p = replay(trace.header.config.clone().unwrap(), &trace.frames).unwrap();
        let replay_log: String = p
            .haptic_log()
            .iter()
            .map(|e| rehab_core::feedback::format_log_line(e) + "\n")
            .collect();
        (
            out.report.to_json(),
            out.haptic_log_text(),
            p.report(&trace.header.patient_id).to_json(),
            replay_log,
        )
    };
    let first = run();
    let second = run();
    let runs_match = first == second;
    let replay_matches = first.0 == first.2 && first.1 == first.3;
    verdict(
        7,
        "determinism",
        runs_match && replay_matches,
        format!(
            "simulate x2 identical: {runs_match}; replay equals simulate: {replay_matches} ({} report bytes, {} log bytes)",
            first.0.len(),
            first.1.len()
        ),
    );
}

#[test]
fn criterion_8_closed_loop() {
    let out = run_closed_loop(&Scenario::default()).unwrap();
    let r = &out.report;
    let expected: u32 = Scenario::default().session.exercises.iter().map(|e| e.repetitions).sum();
    let all_done = r.session.outcomes.completed == expected && r.reps.iter().all(|x| x.outcome == RepOutcome::Completed);
    let mean_dev = mean_of(r, |x| x.angle_deviation);
    let eff_ok = r.reps.iter().all(|x| x.effective_time.is_some_and(|e| (0.0..=10.0).contains(&e)));

    // Matched seeds, default patient, warnings on against off.
    let seeds: Vec<u64> = (1..=20).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (on, off) = paired_effective_times(&seeds, PatientModel::default().fatigue_droop);
    let exceeds = mean(&on) > mean(&off);
    // Reported alongside: a patient whose droop can actually leave the band.
    let (on5, off5) = paired_effective_times(&seeds, 0.5);
    verdict(
        8,
        "closed-loop plausibility",
        all_done && mean_dev < 5.0 && eff_ok && exceeds,
        format!(
            "{}/{expected} reps completed, mean deviation {mean_dev:.2} deg, effective time in [0, 10]: {eff_ok}; \
             warnings on/off over 20 seeds: default patient {:.2}/{:.2} (exceeds: {exceeds}), droop 0.5 {:.2}/{:.2}",
            r.session.outcomes.completed,
            mean(&on),
            mean(&off),
            mean(&on5),
            mean(&off5)
        ),
    );
}
