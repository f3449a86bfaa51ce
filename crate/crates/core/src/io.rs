//! Frame-stream I/O: the line-delimited wire format for detection frames.
//!
//! One frame per line, as a JSON object with canonical field order
//! `{"stream": …, "frame": …, "t_ms": …, "detections": […]}`; each
//! detection is `{"class": …, "bbox": [x, y, w, h], "conf": …}` with
//! optional trailing `"attrs"` and `"track"` fields. Text over binary so
//! fixtures diff cleanly; writing a parsed file back re-encodes it
//! byte-identically.
//!
//! Parsing validates per line — malformed JSON, invalid boxes, confidence
//! outside [0, 1] — and enforces strictly increasing timestamps within a
//! file, reporting the first offending line number (1-based).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write as IoWrite};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Detection;

/// One frame of detections as carried on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    /// Publisher stream id.
    pub stream: String,
    /// Frame number assigned by the publisher.
    pub frame: u64,
    /// Capture timestamp, milliseconds.
    pub t_ms: i64,
    pub detections: Vec<Detection>,
}

/// Failures of frame-file parsing, located by 1-based line number.
#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("frame file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("frame file line {line}: timestamp {got} not after {last}")]
    OrderingViolation { line: usize, last: i64, got: i64 },
}

fn validate_record(record: &FrameRecord, line: usize) -> Result<(), FrameIoError> {
    for det in &record.detections {
        if !det.bbox.is_valid() {
            return Err(FrameIoError::Parse {
                line,
                message: format!(
                    "invalid bbox [{}, {}, {}, {}] for class '{}'",
                    det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h, det.class
                ),
            });
        }
        if !(0.0..=1.0).contains(&det.conf) || det.conf.is_nan() {
            return Err(FrameIoError::Parse {
                line,
                message: format!("confidence {} outside [0, 1]", det.conf),
            });
        }
    }
    Ok(())
}

/// Parses a frame file from any reader. Records are validated and must
/// have strictly increasing timestamps; blank lines are not allowed.
pub fn read_frames<R: Read>(reader: R) -> Result<Vec<FrameRecord>, FrameIoError> {
    let mut records = Vec::new();
    let mut last_ts: Option<i64> = None;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        let record: FrameRecord =
            serde_json::from_str(&text).map_err(|e| FrameIoError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        validate_record(&record, line_no)?;
        if let Some(last) = last_ts {
            if record.t_ms <= last {
                return Err(FrameIoError::OrderingViolation {
                    line: line_no,
                    last,
                    got: record.t_ms,
                });
            }
        }
        last_ts = Some(record.t_ms);
        records.push(record);
    }
    Ok(records)
}

/// Parses a frame file from disk.
pub fn parse_frames<P: AsRef<Path>>(path: P) -> Result<Vec<FrameRecord>, FrameIoError> {
    read_frames(File::open(path)?)
}

/// Encodes one record as its canonical wire line (no trailing newline).
pub fn encode_frame(record: &FrameRecord) -> String {
    serde_json::to_string(record).expect("frame records always serialize")
}

/// Writes records to any writer, one canonical line each.
pub fn write_frames<W: IoWrite>(writer: W, records: &[FrameRecord]) -> Result<(), FrameIoError> {
    let mut w = BufWriter::new(writer);
    for record in records {
        writeln!(w, "{}", encode_frame(record))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes records to a file, one canonical line each.
pub fn save_frames<P: AsRef<Path>>(path: P, records: &[FrameRecord]) -> Result<(), FrameIoError> {
    write_frames(File::create(path)?, records)
}
