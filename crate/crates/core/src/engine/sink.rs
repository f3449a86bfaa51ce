//! Notification delivery: the wire record and sink implementations.
//!
//! Sinks receive one [`NotificationRecord`] per match set. The wire form
//! is one JSON object per line with fixed key order `{query_id,
//! subscriber_id, span_start_ms, span_end_ms, match_kind, bindings,
//! latency_us}` — replaying identical input yields byte-identical logs
//! except for the `latency_us` values, which carry wall-clock timings
//! (see [`normalize_log`]).

use std::io::Write;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// What a notification's bindings contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    /// Per-frame object matches of the query's object specs.
    Objects,
    /// Rule matches of the query's relation spec.
    Pattern,
    /// Slot occupancy transitions.
    Occupancy,
    /// A per-query evaluation error (other queries are unaffected).
    Error,
}

/// One notification as written to a sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotificationRecord {
    pub query_id: String,
    pub subscriber_id: String,
    pub span_start_ms: i64,
    pub span_end_ms: i64,
    pub match_kind: MatchKind,
    pub bindings: serde_json::Value,
    pub latency_us: u64,
}

impl NotificationRecord {
    /// The canonical one-line wire encoding.
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("notification records always serialize")
    }
}

/// Receives notifications for a subscriber. Implementations must tolerate
/// delivery from whichever thread drives the publisher's lane.
pub trait NotificationSink: Send + Sync {
    fn deliver(&self, record: &NotificationRecord);
}

/// Collects notifications in memory (tests, scoring).
#[derive(Debug, Default)]
pub struct VecSink {
    records: Mutex<Vec<NotificationRecord>>,
}

impl VecSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> Vec<NotificationRecord> {
        self.records.lock().expect("sink lock poisoned").clone()
    }
}

impl NotificationSink for VecSink {
    fn deliver(&self, record: &NotificationRecord) {
        self.records
            .lock()
            .expect("sink lock poisoned")
            .push(record.clone());
    }
}

/// Writes each notification as one wire line.
pub struct WriterSink<W: Write + Send> {
    writer: Mutex<W>,
}

impl<W: Write + Send> WriterSink<W> {
    pub fn new(writer: W) -> Self {
        WriterSink {
            writer: Mutex::new(writer),
        }
    }

    pub fn into_inner(self) -> W {
        self.writer.into_inner().expect("sink lock poisoned")
    }
}

impl<W: Write + Send> NotificationSink for WriterSink<W> {
    fn deliver(&self, record: &NotificationRecord) {
        let mut w = self.writer.lock().expect("sink lock poisoned");
        // A sink write failure must not take down the matcher; the CLI
        // checks its writer on shutdown.
        let _ = writeln!(w, "{}", record.encode());
    }
}

/// Parses a notification log (one record per line).
pub fn parse_log(text: &str) -> Result<Vec<NotificationRecord>, serde_json::Error> {
    text.lines().map(serde_json::from_str).collect()
}

/// Rewrites a log with every `latency_us` zeroed, for byte-exact replay
/// comparison of the deterministic fields.
pub fn normalize_log(records: &[NotificationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let mut r = r.clone();
        r.latency_us = 0;
        out.push_str(&r.encode());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> NotificationRecord {
        NotificationRecord {
            query_id: "q1".to_string(),
            subscriber_id: "s1".to_string(),
            span_start_ms: 0,
            span_end_ms: 132,
            match_kind: MatchKind::Objects,
            bindings: serde_json::json!([{"t_ms": 0, "class": "Car"}]),
            latency_us: 42,
        }
    }

    #[test]
    fn wire_key_order_is_canonical() {
        let line = record().encode();
        assert_eq!(
            line,
            concat!(
                r#"{"query_id":"q1","subscriber_id":"s1","span_start_ms":0,"span_end_ms":132,"#,
                r#""match_kind":"objects","bindings":[{"class":"Car","t_ms":0}],"latency_us":42}"#
            )
        );
    }

    #[test]
    fn log_round_trips() {
        let text = format!("{}\n{}\n", record().encode(), record().encode());
        let parsed = parse_log(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], record());
    }

    #[test]
    fn normalization_zeroes_latency_only() {
        let mut a = record();
        let mut b = record();
        a.latency_us = 10;
        b.latency_us = 99;
        assert_eq!(normalize_log(&[a]), normalize_log(&[b]));
    }

    #[test]
    fn vec_sink_collects_in_order() {
        let sink = VecSink::new();
        let mut r = record();
        sink.deliver(&r);
        r.query_id = "q2".to_string();
        sink.deliver(&r);
        let records = sink.records();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].query_id, "q1");
        assert_eq!(records[1].query_id, "q2");
    }

    #[test]
    fn writer_sink_emits_lines() {
        let sink = WriterSink::new(Vec::<u8>::new());
        sink.deliver(&record());
        sink.deliver(&record());
        let buf = sink.into_inner();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_log(&text).unwrap().len(), 2);
    }
}
