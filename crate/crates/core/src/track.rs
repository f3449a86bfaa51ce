//! Track association: assigns stable track ids to detections across
//! consecutive frames by greedy IoU matching.
//!
//! Per frame and per class, candidate pairs between the previous frame's
//! detections and the current frame's unassigned ones are taken in
//! descending IoU order; a pair at or above the threshold lets the current
//! detection inherit the previous track id. Unmatched detections open
//! fresh tracks. Detections arriving with a track id already set are left
//! untouched and still compete as association targets in the next frame.
//!
//! Greedy rather than optimal assignment: the streams this engine sees are
//! low-density, where greedy and optimal agree (checked against a
//! brute-force oracle in the tests), and greedy is a simple O(n²) per
//! frame.

use crate::graph::{Detection, TrackId};
use crate::io::FrameRecord;
use crate::spatial::{iou, Rect};

/// Association targets: (class, bbox, track) of the previous frame.
pub(crate) type PrevBoxes = Vec<(String, Rect, TrackId)>;

/// Associates one frame's detections against the previous frame's boxes,
/// filling in missing `track` fields. Fresh ids come from `next_track`,
/// which is first bumped past any pre-assigned ids in this frame. Returns
/// the association targets for the next frame.
pub(crate) fn associate_step(
    prev: &PrevBoxes,
    detections: &mut [Detection],
    iou_threshold: f64,
    next_track: &mut TrackId,
) -> PrevBoxes {
    if let Some(max_preset) = detections.iter().filter_map(|d| d.track).max() {
        *next_track = (*next_track).max(max_preset + 1);
    }
    // Candidate pairs between previous tracks and this frame's unassigned
    // detections, greedy by descending IoU. Ties break on (previous index,
    // current index) for determinism.
    let unassigned: Vec<usize> = detections
        .iter()
        .enumerate()
        .filter(|(_, d)| d.track.is_none())
        .map(|(i, _)| i)
        .collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, (pclass, pbox, _)) in prev.iter().enumerate() {
        for &ci in &unassigned {
            let det = &detections[ci];
            if det.class != *pclass {
                continue;
            }
            let overlap = iou(pbox, &det.bbox);
            if overlap >= iou_threshold {
                pairs.push((overlap, pi, ci));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("IoU is never NaN")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut prev_used = vec![false; prev.len()];
    let mut cur_done = vec![false; detections.len()];
    for (_, pi, ci) in pairs {
        if prev_used[pi] || cur_done[ci] {
            continue;
        }
        prev_used[pi] = true;
        cur_done[ci] = true;
        detections[ci].track = Some(prev[pi].2);
    }
    for det in detections.iter_mut() {
        if det.track.is_none() {
            det.track = Some(*next_track);
            *next_track += 1;
        }
    }
    detections
        .iter()
        .map(|d| (d.class.clone(), d.bbox, d.track.expect("just assigned")))
        .collect()
}

/// Fills in missing `track` fields across a frame sequence.
///
/// `iou_threshold` must lie in (0, 1). Frames are assumed ordered (as
/// produced by [`crate::io::parse_frames`]); association only ever looks
/// at the immediately preceding frame, so a dropout of even one frame
/// starts a new track.
pub fn track_associate(frames: &mut [FrameRecord], iou_threshold: f64) {
    assert!(
        iou_threshold > 0.0 && iou_threshold < 1.0,
        "iou_threshold must lie in (0, 1), got {iou_threshold}"
    );
    // Fresh ids start above every pre-assigned id in the file.
    let mut next_track: TrackId = frames
        .iter()
        .flat_map(|f| f.detections.iter())
        .filter_map(|d| d.track)
        .max()
        .map_or(1, |m| m + 1);

    let mut prev: PrevBoxes = Vec::new();
    for frame in frames.iter_mut() {
        prev = associate_step(&prev, &mut frame.detections, iou_threshold, &mut next_track);
    }
}
