//! `stream`: a reader thread feeds raw chunks to the engine thread, which
//! decodes, tracks the session and reports progress.

use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::sync::mpsc;
use std::thread;

use anyhow::{anyhow, Context, Result};
use rehab_core::pipeline::Pipeline;
use rehab_core::session::SessionProgress;

use crate::config::{load_scenario, ConfigArgs};
use crate::output::{emit, judge, Outputs, SessionFiles};
use crate::Status;

const CHUNK: usize = 4096;
const FEED: usize = 64;
/// Progress lines are spaced by stream time, not wall time.
const PROGRESS_EVERY_MS: u32 = 500;

enum Source {
    Stdin,
    File(std::path::PathBuf),
    Tcp(String),
}

impl Source {
    fn parse(s: &str) -> Self {
        match s {
            "-" => Source::Stdin,
            _ => match s.strip_prefix("tcp:") {
                Some(addr) => Source::Tcp(addr.to_string()),
                None => Source::File(s.into()),
            },
        }
    }

    /// Opens the byte source, plus a return channel for haptic commands
    /// when the source is a socket.
    fn open(&self) -> Result<(Box<dyn Read + Send>, Option<TcpStream>)> {
        Ok(match self {
            Source::Stdin => (Box::new(io::stdin()), None),
            Source::File(p) => {
                let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
                (Box::new(f), None)
            }
            Source::Tcp(addr) => {
                let s = TcpStream::connect(addr).with_context(|| format!("connecting to {addr}"))?;
                let back = s.try_clone().context("cloning socket")?;
                (Box::new(s), Some(back))
            }
        })
    }
}

fn progress_line(t_ms: u32, p: &SessionProgress) -> String {
    if p.complete {
        return format!("[{:>7.1} s] session complete", f64::from(t_ms) / 1000.0);
    }
    let countdown = p
        .countdown_remaining
        .map_or(String::new(), |c| format!(" hold {c:.1} s left"));
    format!(
        "[{:>7.1} s] exercise {}/{} {} rep {}/{} {}{countdown}",
        f64::from(t_ms) / 1000.0,
        p.exercise_index + 1,
        p.exercise_count,
        p.pose.name(),
        p.rep,
        p.repetitions,
        p.phase.name(),
    )
}

pub fn run(source: &str, args: &ConfigArgs, outputs: &Outputs) -> Result<Status> {
    let scenario = load_scenario(args)?;
    let mut pipeline = Pipeline::new(scenario.pipeline_config()).map_err(|e| anyhow!("invalid configuration: {e}"))?;
    let (mut reader, mut back) = Source::parse(source).open()?;

    let (tx, rx) = mpsc::sync_channel::<io::Result<Vec<u8>>>(64);
    let handle = thread::spawn(move || {
        let mut buf = vec![0u8; CHUNK];
        loop {
            match reader.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    if tx.send(Ok(buf[..n].to_vec())).is_err() {
                        break;
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    let _ = tx.send(Err(e));
                    break;
                }
            }
        }
    });

    let mut stream_failed = false;
    let mut next_progress = 0u32;
    for msg in rx {
        let chunk = match msg {
            Ok(c) => c,
            Err(e) => {
                log::error!("stream read failed: {e}; ending session");
                stream_failed = true;
                break;
            }
        };
        // Small slices keep progress and haptic replies close to frame rate.
        for piece in chunk.chunks(FEED) {
            let sent = pipeline.push_bytes(piece);
            if let Some(sock) = back.as_mut() {
                let bytes: Vec<u8> = sent.iter().flat_map(|e| e.command.encode()).collect();
                if let Err(e) = sock.write_all(&bytes) {
                    log::warn!("cannot send haptic commands: {e}");
                    back = None;
                }
            }
            if let Some(t) = pipeline.last_pose().map(|p| p.timestamp_ms) {
                if t >= next_progress {
                    let _ = writeln!(io::stderr(), "{}", progress_line(t, &pipeline.progress()));
                    next_progress = t - t % PROGRESS_EVERY_MS + PROGRESS_EVERY_MS;
                }
            }
        }
    }
    let _ = handle.join();
    pipeline.finish();

    let report = pipeline.report(&scenario.patient_id);
    emit(outputs, &SessionFiles::from_pipeline(&report, &pipeline))?;
    let status = judge(pipeline.diagnostics(), 0);
    Ok(if stream_failed { Status::Corrupt } else { status })
}
