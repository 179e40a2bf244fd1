use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rehab_core::feedback::{format_log_line, HapticLogEntry};
use rehab_core::metrics::{render_summary, SessionReport};
use rehab_core::pipeline::{Pipeline, PipelineDiagnostic};

use crate::{Format, Status};

#[derive(Debug, Clone)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
    pub haptic_log: Option<PathBuf>,
    pub format: Format,
}

/// What a finished session leaves behind, however it was produced.
pub struct SessionFiles<'a> {
    pub report: &'a SessionReport,
    pub haptic_log: &'a [HapticLogEntry],
    pub event_log: Vec<String>,
    /// Extra files for the output directory, e.g. recordings.
    pub extra: Vec<(&'static str, Vec<u8>)>,
}

impl<'a> SessionFiles<'a> {
    pub fn from_pipeline(report: &'a SessionReport, pipeline: &'a Pipeline) -> Self {
        Self {
            report,
            haptic_log: pipeline.haptic_log(),
            event_log: pipeline.event_log().iter().map(|e| e.to_line()).collect(),
            extra: Vec::new(),
        }
    }
}

pub fn haptic_text(log: &[HapticLogEntry]) -> String {
    log.iter().map(|e| format_log_line(e) + "\n").collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Writes the requested files and prints the report to stdout.
pub fn emit(outputs: &Outputs, files: &SessionFiles) -> Result<()> {
    let json = files.report.to_json();
    let haptic = haptic_text(files.haptic_log);
    if let Some(dir) = &outputs.dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("report.json"), json.as_bytes())?;
        write(&dir.join("haptic.log"), haptic.as_bytes())?;
        let events: String = files.event_log.iter().map(|l| format!("{l}\n")).collect();
        write(&dir.join("events.log"), events.as_bytes())?;
        for (name, bytes) in &files.extra {
            write(&dir.join(name), bytes)?;
        }
        log::info!("wrote outputs to {}", dir.display());
    }
    if let Some(path) = &outputs.haptic_log {
        write(path, haptic.as_bytes())?;
    }
    match outputs.format {
        Format::Report => print!("{json}"),
        Format::Summary => print!("{}", render_summary(files.report)),
    }
    Ok(())
}

/// Logs every diagnostic and reports whether any points at damaged input.
pub fn judge(diagnostics: &[PipelineDiagnostic], parse_errors: usize) -> Status {
    let mut corrupt = parse_errors > 0;
    for d in diagnostics {
        if d.is_corruption() {
            log::warn!("{d}");
            corrupt = true;
        } else {
            log::info!("{d}");
        }
    }
    if corrupt {
        Status::Corrupt
    } else {
        Status::Clean
    }
}
