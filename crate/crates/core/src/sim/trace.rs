//! Recorded session trace: a commented header followed by one frame record
//! per line (see [`crate::protocol::records`]).
//!
//! ```text
//! # rehab-trace 1
//! # patient_id=sim-patient
//! # calibration thigh=... calf=... bed_normal=...
//! # config={...}
//! F,thigh,0,4.00,-3.00,20.00,1
//! ```

use crate::pipeline::PipelineConfig;
use crate::protocol::records::{format_frame, parse_line};
use crate::protocol::Frame;

const MAGIC: &str = "# rehab-trace 1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceHeader {
    pub patient_id: String,
    pub calibration: Option<String>,
    pub config: Option<PipelineConfig>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub frames: Vec<Frame>,
}

pub fn format_trace(trace: &Trace) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("# patient_id={}\n", trace.header.patient_id));
    if let Some(c) = &trace.header.calibration {
        out.push_str(&format!("# {c}\n"));
    }
    if let Some(cfg) = &trace.header.config {
        let json = serde_json::to_string(cfg).expect("config serializes");
        out.push_str(&format!("# config={json}\n"));
    }
    for f in &trace.frames {
        out.push_str(&format_frame(f));
        out.push('\n');
    }
    out
}

/// Parses a trace. Malformed frame lines are skipped and reported with
/// their 1-based line number.
pub fn parse_trace(text: &str) -> (Trace, Vec<(usize, String)>) {
    let mut trace = Trace::default();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some(id) = meta.strip_prefix("patient_id=") {
                trace.header.patient_id = id.trim().to_string();
            } else if meta.starts_with("calibration ") {
                trace.header.calibration = Some(meta.trim().to_string());
            } else if let Some(json) = meta.strip_prefix("config=") {
                match serde_json::from_str(json) {
                    Ok(cfg) => trace.header.config = Some(cfg),
                    Err(e) => errors.push((line_no, format!("bad config header: {e}"))),
                }
            }
            continue;
        }
        match parse_line(line) {
            Ok(Some(frame)) => trace.frames.push(frame),
            Ok(None) => {}
            Err(e) => errors.push((line_no, e.to_string())),
        }
    }
    (trace, errors)
}
