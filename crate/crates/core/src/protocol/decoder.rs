use super::{
    xor, Frame, HapticCommandFrame, ImuFrameFiltered, ImuFrameRaw, ProtocolError, FILTERED_LEN,
    FILTERED_SYNC, HAPTIC_LEN, HAPTIC_SYNC, IMU_SYNC, RAW_LEN, RAW_SYNC,
};

/// Something the decoder noticed while scanning. Offsets are absolute byte
/// positions in the stream fed to the decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// A run of bytes that did not start a frame was discarded.
    ResyncSkip { offset: u64, skipped: usize },
    /// A sync word was found but the checksum did not validate.
    ChecksumMismatch { offset: u64, expected: u8, found: u8 },
    /// Checksum valid but a field was outside its wire range.
    InvalidField { offset: u64, reason: String },
    /// The stream ended inside a frame.
    Truncated { offset: u64, pending: usize },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::ResyncSkip { offset, skipped } => {
                write!(f, "resync: skipped {skipped} byte(s) at offset {offset}")
            }
            Diagnostic::ChecksumMismatch {
                offset,
                expected,
                found,
            } => write!(
                f,
                "checksum mismatch at offset {offset}: expected {expected:#04x}, found {found:#04x}"
            ),
            Diagnostic::InvalidField { offset, reason } => {
                write!(f, "invalid field at offset {offset}: {reason}")
            }
            Diagnostic::Truncated { offset, pending } => {
                write!(f, "stream ended inside a frame at offset {offset} ({pending} byte(s))")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodeOutput {
    pub frames: Vec<Frame>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Copy)]
enum Kind {
    Filtered,
    Raw,
    Haptic,
}

impl Kind {
    fn len(self) -> usize {
        match self {
            Kind::Filtered => FILTERED_LEN,
            Kind::Raw => RAW_LEN,
            Kind::Haptic => HAPTIC_LEN,
        }
    }
}

enum Scan {
    Frame(Kind),
    /// Byte 0 could begin a sync word; need more input to decide.
    NeedMore,
    NoSync,
}

fn scan(buf: &[u8]) -> Scan {
    match buf {
        [] => Scan::NeedMore,
        [IMU_SYNC] | [0xB6] => Scan::NeedMore,
        [IMU_SYNC, FILTERED_SYNC, ..] => Scan::Frame(Kind::Filtered),
        [IMU_SYNC, RAW_SYNC, ..] => Scan::Frame(Kind::Raw),
        [a, b, ..] if [*a, *b] == HAPTIC_SYNC => Scan::Frame(Kind::Haptic),
        _ => Scan::NoSync,
    }
}

/// Streaming frame decoder.
///
/// Bytes may be pushed in arbitrary chunks; an incomplete trailing frame is
/// retained until the next push. On any mismatch the decoder advances one
/// byte and keeps scanning, so corruption never stops the stream.
#[derive(Debug, Clone, Default)]
pub struct StreamDecoder {
    buf: Vec<u8>,
    head: usize,
    /// Absolute offset of `buf[head]`.
    offset: u64,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bytes held back waiting for the rest of a frame.
    pub fn pending(&self) -> usize {
        self.buf.len() - self.head
    }

    pub fn push(&mut self, bytes: &[u8]) -> DecodeOutput {
        let mut out = DecodeOutput::default();
        self.push_into(bytes, &mut out);
        out
    }

    pub fn push_into(&mut self, bytes: &[u8], out: &mut DecodeOutput) {
        self.buf.extend_from_slice(bytes);
        let mut skip_start: Option<u64> = None;
        let mut skipped = 0usize;
        let flush_skip = |out: &mut DecodeOutput, start: &mut Option<u64>, n: &mut usize| {
            if let Some(offset) = start.take() {
                out.diagnostics.push(Diagnostic::ResyncSkip { offset, skipped: *n });
                *n = 0;
            }
        };

        loop {
            let window = &self.buf[self.head..];
            match scan(window) {
                Scan::NeedMore => break,
                Scan::NoSync => {
                    skip_start.get_or_insert(self.offset);
                    skipped += 1;
                    self.advance(1);
                }
                Scan::Frame(kind) => {
                    let len = kind.len();
                    if window.len() < len {
                        break;
                    }
                    let bytes = &window[..len];
                    let expected = xor(&bytes[2..len - 1]);
                    let found = bytes[len - 1];
                    if expected != found {
                        flush_skip(out, &mut skip_start, &mut skipped);
                        out.diagnostics.push(Diagnostic::ChecksumMismatch {
                            offset: self.offset,
                            expected,
                            found,
                        });
                        self.advance(1);
                        continue;
                    }
                    match decode_body(kind, bytes) {
                        Ok(frame) => {
                            flush_skip(out, &mut skip_start, &mut skipped);
                            out.frames.push(frame);
                            self.advance(len);
                        }
                        Err(e) => {
                            flush_skip(out, &mut skip_start, &mut skipped);
                            out.diagnostics.push(Diagnostic::InvalidField {
                                offset: self.offset,
                                reason: e.to_string(),
                            });
                            self.advance(1);
                        }
                    }
                }
            }
        }
        flush_skip(out, &mut skip_start, &mut skipped);
        self.compact();
    }

    /// Ends the stream, reporting any bytes still held back.
    pub fn finish(&mut self) -> Vec<Diagnostic> {
        let pending = self.pending();
        let mut diags = Vec::new();
        if pending > 0 {
            diags.push(Diagnostic::Truncated {
                offset: self.offset,
                pending,
            });
            self.advance(pending);
            self.compact();
        }
        diags
    }

    fn advance(&mut self, n: usize) {
        self.head += n;
        self.offset += n as u64;
    }

    fn compact(&mut self) {
        if self.head > 0 {
            self.buf.drain(..self.head);
            self.head = 0;
        }
    }
}

fn decode_body(kind: Kind, bytes: &[u8]) -> Result<Frame, ProtocolError> {
    Ok(match kind {
        Kind::Filtered => Frame::Filtered(ImuFrameFiltered::decode_body(bytes)?),
        Kind::Raw => Frame::Raw(ImuFrameRaw::decode_body(bytes)?),
        Kind::Haptic => Frame::Haptic(HapticCommandFrame::decode_body(bytes)?),
    })
}

/// Feeds `bytes` through `state`, returning recovered frames and diagnostics.
pub fn decode_stream(bytes: &[u8], state: &mut StreamDecoder) -> (Vec<Frame>, Vec<Diagnostic>) {
    let out = state.push(bytes);
    (out.frames, out.diagnostics)
}
