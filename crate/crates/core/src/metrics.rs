//! Evaluation metrics: per-state F1 against ground truth, latency
//! statistics, and throughput report shapes.
//!
//! F1 follows the windowed methodology: per frame, predicted objects are
//! matched one-to-one against ground-truth objects (classes must agree and
//! IoU ≥ 0.5, maximum-cardinality matching); per state, the window's
//! per-frame F1 values are averaged arithmetically. A frame with neither
//! ground truth nor predictions scores 1.0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::GroundTruth;
use crate::spatial::{iou, Rect};
use crate::temporal::TimeSpan;

/// IoU at or above which a predicted box matches a ground-truth box.
pub const MATCH_IOU: f64 = 0.5;

/// Failures of metric computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    /// Predictions reference a timestamp the ground truth does not cover.
    #[error("predictions at t={t_ms} ms lie outside the ground-truth range")]
    RangeMismatch { t_ms: i64 },
}

/// One predicted object instance in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedObject {
    pub class: String,
    pub bbox: Rect,
}

/// Per-frame precision/recall counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl FrameCounts {
    /// 2·TP / (2·TP + FP + FN); an empty-vs-empty frame scores 1.0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// The F1 of one window state: the mean of its per-frame values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateScore {
    pub state_index: usize,
    pub span: TimeSpan,
    /// (timestamp, per-frame F1) for each frame of the state.
    pub per_frame: Vec<(i64, f64)>,
    pub mean_f1: f64,
}

/// Maximum-cardinality matching between predictions and ground truth in
/// one frame (Kuhn's augmenting paths; frames are small). An edge exists
/// when classes agree and IoU ≥ [`MATCH_IOU`].
pub fn match_frame(
    predicted: &[PredictedObject],
    truth: &[(String, Rect)],
) -> FrameCounts {
    let adj: Vec<Vec<usize>> = predicted
        .iter()
        .map(|p| {
            truth
                .iter()
                .enumerate()
                .filter(|(_, (class, bbox))| *class == p.class && iou(&p.bbox, bbox) >= MATCH_IOU)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut matched_truth: Vec<Option<usize>> = vec![None; truth.len()];

    fn augment(
        p: usize,
        adj: &[Vec<usize>],
        matched_truth: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &t in &adj[p] {
            if visited[t] {
                continue;
            }
            visited[t] = true;
            if matched_truth[t].is_none()
                || augment(matched_truth[t].unwrap(), adj, matched_truth, visited)
            {
                matched_truth[t] = Some(p);
                return true;
            }
        }
        false
    }

    let mut tp = 0;
    for p in 0..predicted.len() {
        let mut visited = vec![false; truth.len()];
        if augment(p, &adj, &mut matched_truth, &mut visited) {
            tp += 1;
        }
    }
    FrameCounts {
        tp,
        fp: predicted.len() - tp,
        fn_: truth.len() - tp,
    }
}

/// Scores predictions against ground truth under tumbling count windows.
///
/// `predictions` maps frame timestamps to predicted objects; frames of the
/// ground truth with no entry count as empty predictions. Only full
/// windows are scored (`⌊frames / window_n⌋` states), mirroring the
/// engine's tumbling-count semantics. A prediction timestamp outside the
/// ground truth is a [`MetricsError::RangeMismatch`].
pub fn compute_f1(
    predictions: &BTreeMap<i64, Vec<PredictedObject>>,
    gt: &GroundTruth,
    window_n: usize,
) -> Result<Vec<StateScore>, MetricsError> {
    assert!(window_n >= 1, "window_n must be at least 1");
    for &t in predictions.keys() {
        if gt.objects_at(t).is_none() {
            return Err(MetricsError::RangeMismatch { t_ms: t });
        }
    }
    let empty: Vec<PredictedObject> = Vec::new();
    let mut scores = Vec::new();
    for (state_index, window) in gt.presence.chunks(window_n).enumerate() {
        if window.len() < window_n {
            break; // partial trailing window: no state
        }
        let mut per_frame = Vec::with_capacity(window_n);
        for frame in window {
            let predicted = predictions.get(&frame.t_ms).unwrap_or(&empty);
            let truth: Vec<(String, Rect)> = frame
                .objects
                .iter()
                .map(|o| (o.class.clone(), o.bbox))
                .collect();
            per_frame.push((frame.t_ms, match_frame(predicted, &truth).f1()));
        }
        let mean_f1 = per_frame.iter().map(|(_, f)| f).sum::<f64>() / window_n as f64;
        scores.push(StateScore {
            state_index,
            span: TimeSpan {
                start_ms: window[0].t_ms,
                end_ms: window[window_n - 1].t_ms,
            },
            per_frame,
            mean_f1,
        });
    }
    Ok(scores)
}

/// Summary statistics over matcher latency samples (microseconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
}

impl LatencyStats {
    /// Nearest-rank percentiles over the samples. Empty input yields an
    /// all-zero report with count 0.
    pub fn from_samples(samples: &[u64]) -> LatencyStats {
        if samples.is_empty() {
            return LatencyStats {
                count: 0,
                mean_us: 0.0,
                p50_us: 0.0,
                p99_us: 0.0,
                max_us: 0.0,
            };
        }
        let mut sorted: Vec<u64> = samples.to_vec();
        sorted.sort_unstable();
        let pct = |p: f64| {
            let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
            sorted[rank.clamp(1, sorted.len()) - 1] as f64
        };
        LatencyStats {
            count: sorted.len(),
            mean_us: sorted.iter().sum::<u64>() as f64 / sorted.len() as f64,
            p50_us: pct(50.0),
            p99_us: pct(99.0),
            max_us: *sorted.last().unwrap() as f64,
        }
    }
}

/// One point of the throughput-vs-streams curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub streams: usize,
    pub frames: u64,
    pub elapsed_s: f64,
    pub frames_per_sec: f64,
}
