//! Helpers over closed-loop simulation reports.

use rehab_core::metrics::{RepRow, SessionReport};
use rehab_core::sim::{run_closed_loop, PatientModel, Scenario};

/// Mean of a per-rep metric over the reps that have it.
pub fn mean_of(report: &SessionReport, f: impl Fn(&RepRow) -> Option<f64>) -> f64 {
    let v: Vec<f64> = report.reps.iter().filter_map(f).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-seed mean effective time with warnings on and off, same patient.
pub fn paired_effective_times(seeds: &[u64], droop: f64) -> (Vec<f64>, Vec<f64>) {
    let run = |seed: u64, vibro: bool| {
        let mut sc = Scenario {
            seed,
            patient: PatientModel {
                fatigue_droop: droop,
                ..PatientModel::default()
            },
            ..Scenario::default()
        };
        sc.feedback.vibro_enabled = vibro;
        let out = run_closed_loop(&sc).expect("scenario runs");
        mean_of(&out.report, |r| r.effective_time)
    };
    seeds.iter().map(|&s| (run(s, true), run(s, false))).unzip()
}
