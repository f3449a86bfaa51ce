//! Measurement harnesses: latency sampling and multi-stream throughput.
//!
//! These drive a real [`Engine`] end to end — ingest, windowing,
//! matching, delivery — and report wall-clock figures, so they are the
//! substance behind the `bench` CLI subcommands and the performance
//! checks in the test suite.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use crate::engine::{Engine, EngineError, NotificationRecord, NotificationSink, VecSink};
use crate::io::FrameRecord;
use crate::metrics::{LatencyStats, ThroughputPoint};

/// A sink that only counts deliveries, for throughput runs where
/// retaining every record would distort the measurement.
#[derive(Default)]
pub struct CountingSink {
    delivered: AtomicU64,
}

impl CountingSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delivered(&self) -> u64 {
        self.delivered.load(Ordering::Relaxed)
    }
}

impl NotificationSink for CountingSink {
    fn deliver(&self, _record: &NotificationRecord) {
        self.delivered.fetch_add(1, Ordering::Relaxed);
    }
}

/// Interleaves several publishers' frame sequences into one global
/// ingest order: ascending timestamp, publisher id breaking ties. Each
/// input sequence is strictly increasing in time, so its internal order
/// survives the sort.
pub fn merge_streams(streams: &[(String, Vec<FrameRecord>)]) -> Vec<(&str, &FrameRecord)> {
    let mut merged: Vec<(&str, &FrameRecord)> = streams
        .iter()
        .flat_map(|(publisher, frames)| {
            frames.iter().map(move |f| (publisher.as_str(), f))
        })
        .collect();
    merged.sort_by(|a, b| a.1.t_ms.cmp(&b.1.t_ms).then_with(|| a.0.cmp(b.0)));
    merged
}

/// Drives the merged `streams` through a freshly built engine `repeat`
/// times and pools latency samples by query id. The builder runs once
/// per repetition so every pass starts from clean lanes (timestamps
/// restart across repetitions).
///
/// Latency here is the matcher's own clock: state receipt to
/// notification emission. When the engine is built with its state
/// backend enabled, every state handed to the matcher contributes a
/// sample, matched or not; otherwise only notification records carry
/// latencies, so match-free queries yield an empty series.
pub fn measure_latency<F>(
    build: F,
    streams: &[(String, Vec<FrameRecord>)],
    repeat: usize,
) -> Result<BTreeMap<String, LatencyStats>, EngineError>
where
    F: Fn() -> Result<Engine, EngineError>,
{
    assert!(repeat >= 1, "repeat must be at least 1");
    let merged = merge_streams(streams);
    let mut samples: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for _ in 0..repeat {
        let engine = build()?;
        let sink = Arc::new(VecSink::new());
        for subscriber in engine.subscriber_ids() {
            engine.subscribe(&subscriber, sink.clone());
        }
        for (publisher, record) in &merged {
            engine.ingest_frame(publisher, record)?;
        }
        engine.flush();
        let state_log = engine.state_log();
        if state_log.is_empty() {
            for record in sink.records() {
                samples
                    .entry(record.query_id.clone())
                    .or_default()
                    .push(record.latency_us);
            }
        } else {
            for state in state_log {
                samples
                    .entry(state.query_id)
                    .or_default()
                    .push(state.latency_us);
            }
        }
    }
    Ok(samples
        .into_iter()
        .map(|(query_id, latencies)| (query_id, LatencyStats::from_samples(&latencies)))
        .collect())
}

/// Ingests `streams.len()` pre-generated frame sequences concurrently —
/// one thread per publisher — into a single shared engine and reports
/// the aggregate frame rate. The engine must already have one lane per
/// entry (publisher ids are `streams[i].0`); queries and sinks are the
/// caller's choice and should be attached beforehand.
pub fn measure_throughput(
    engine: Arc<Engine>,
    streams: Vec<(String, Vec<FrameRecord>)>,
) -> Result<ThroughputPoint, EngineError> {
    let lanes = streams.len();
    let total_frames: usize = streams.iter().map(|(_, f)| f.len()).sum();
    let started = Instant::now();
    let mut handles = Vec::with_capacity(lanes);
    for (publisher, frames) in streams {
        let engine = engine.clone();
        handles.push(thread::spawn(move || -> Result<(), EngineError> {
            for record in &frames {
                engine.ingest_frame(&publisher, record)?;
            }
            Ok(())
        }));
    }
    for handle in handles {
        handle.join().expect("ingest thread panicked")?;
    }
    engine.flush();
    let elapsed_s = started.elapsed().as_secs_f64();
    Ok(ThroughputPoint {
        streams: lanes,
        frames: total_frames as u64,
        elapsed_s,
        frames_per_sec: total_frames as f64 / elapsed_s.max(f64::MIN_POSITIVE),
    })
}
