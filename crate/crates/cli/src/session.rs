//! `simulate` and `replay`.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use rehab_core::pipeline::{self, Pipeline, PipelineConfig};
use rehab_core::sim::{format_trace, parse_trace, run_closed_loop};

use crate::config::{load_scenario, ConfigArgs};
use crate::output::{emit, judge, Outputs, SessionFiles};
use crate::Status;

pub fn simulate(args: &ConfigArgs, outputs: &Outputs) -> Result<Status> {
    let scenario = load_scenario(args)?;
    log::info!("simulating seed {} for {}", scenario.seed, scenario.patient_id);
    let out = run_closed_loop(&scenario)?;
    let trace = format_trace(&out.trace(&scenario));
    let files = SessionFiles {
        report: &out.report,
        haptic_log: &out.haptic_log,
        event_log: out.event_log.clone(),
        extra: vec![("trace.txt", trace.into_bytes()), ("session.imubin", out.stream.clone())],
    };
    emit(outputs, &files)?;
    // Simulated input is never damaged, so diagnostics are informational.
    for d in &out.diagnostics {
        log::info!("{d}");
    }
    Ok(Status::Clean)
}

/// The config for re-running a recording: explicit command-line settings
/// win, then the recording's own header, then `REHAB_CONFIG` and defaults.
pub fn replay_config(args: &ConfigArgs, header: Option<PipelineConfig>) -> Result<(PipelineConfig, String)> {
    match header {
        Some(h) if !args.is_explicit() => Ok((h, "unknown".to_string())),
        _ => {
            let s = load_scenario(args)?;
            Ok((s.pipeline_config(), s.patient_id))
        }
    }
}

pub fn replay(path: &Path, args: &ConfigArgs, outputs: &Outputs) -> Result<Status> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (pipeline, patient, parse_errors) = if bytes.first() == Some(&b'#') {
        let text = String::from_utf8_lossy(&bytes);
        let (trace, errors) = parse_trace(&text);
        for (line, msg) in &errors {
            log::warn!("{}:{line}: {msg}", path.display());
        }
        let (config, fallback) = replay_config(args, trace.header.config)?;
        let patient = if trace.header.patient_id.is_empty() {
            fallback
        } else {
            trace.header.patient_id
        };
        let p = pipeline::replay(config, &trace.frames).map_err(|e| anyhow!("invalid configuration: {e}"))?;
        (p, patient, errors.len())
    } else {
        let (config, patient) = replay_config(args, None)?;
        let mut p = Pipeline::new(config).map_err(|e| anyhow!("invalid configuration: {e}"))?;
        p.push_bytes(&bytes);
        p.finish();
        (p, patient, 0)
    };
    let report = pipeline.report(&patient);
    emit(outputs, &SessionFiles::from_pipeline(&report, &pipeline))?;
    Ok(judge(pipeline.diagnostics(), parse_errors))
}
