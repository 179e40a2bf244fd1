//! Per-repetition metrics, session reports and paired-condition statistics.

mod report;
mod wilcoxon;

pub use report::{
    build_report, config_hash, render_summary, AggregateRow, ExerciseEcho, Fixed2, MetricStats,
    OutcomeCounts, RepRow, ReportContext, SessionInfo, SessionReport, REPORT_SCHEMA_VERSION,
};
pub use wilcoxon::{
    signed_ranks, wilcoxon_signed_rank, wilcoxon_with_method, StatsError, WilcoxonMethod,
    WilcoxonResult, EXACT_MAX_N,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::ExerciseSpec;
use crate::session::{HoldSample, MovementPhase, RepOutcome, RepRecord};

/// Half-width of the band around the hold-start angle that counts as held.
pub const EFFECTIVE_BAND_DEG: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepMetrics {
    /// Seconds spent in Understanding.
    pub understanding_time: f64,
    pub angle_deviation: f64,
    /// Seconds of the hold spent within the band.
    pub effective_time: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("rep ended {0:?}, metrics need a completed rep")]
    IncompleteRep(RepOutcome),
    #[error("completed rep is missing its {0} record")]
    MissingPhase(&'static str),
}

/// Milliseconds of `[window_start, window_end)` during which the held angle
/// stays within `band` of `reference`.
///
/// Each sample holds its value until the next one; the last holds to the end
/// of the window. Time before the first sample is not counted.
pub fn effective_time_ms(
    trace: &[HoldSample],
    reference: f64,
    band: f64,
    window_start: u32,
    window_end: u32,
) -> u32 {
    let mut total = 0u32;
    for (i, s) in trace.iter().enumerate() {
        let next = trace.get(i + 1).map_or(window_end, |n| n.timestamp_ms);
        let start = s.timestamp_ms.max(window_start);
        let end = next.min(window_end);
        if end > start && (s.angle - reference).abs() <= band + 1e-9 {
            total += end - start;
        }
    }
    total
}

pub fn compute_rep_metrics(rep: &RepRecord, spec: &ExerciseSpec) -> Result<RepMetrics, MetricsError> {
    if rep.outcome != RepOutcome::Completed {
        return Err(MetricsError::IncompleteRep(rep.outcome));
    }
    let understanding = rep
        .phase(MovementPhase::Understanding)
        .ok_or(MetricsError::MissingPhase("understanding"))?;
    let holding = rep
        .phase(MovementPhase::Holding)
        .ok_or(MetricsError::MissingPhase("holding"))?;
    let hold_start = rep
        .hold_start_angle
        .ok_or(MetricsError::MissingPhase("hold start angle"))?;
    let window_end = holding.start_ts + spec.hold_duration_ms();
    let effective = effective_time_ms(
        &rep.hold_trace,
        hold_start,
        EFFECTIVE_BAND_DEG,
        holding.start_ts,
        window_end,
    );
    Ok(RepMetrics {
        understanding_time: f64::from(understanding.duration_ms()) / 1000.0,
        angle_deviation: (hold_start - spec.target).abs(),
        effective_time: f64::from(effective) / 1000.0,
    })
}
