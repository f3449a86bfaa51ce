//! Deterministic synthetic scenario generation with analytic ground
//! truth.
//!
//! Each scenario drives a handful of objects along constant-velocity
//! trajectories and emits detection frames in the wire format, plus a
//! [`GroundTruth`] computed from the trajectories themselves (never from
//! the emitted detections): overtake crossing frames are solved from the
//! speed difference, parking transitions from the overlap arithmetic, and
//! the presence table lists every object whether or not the detector
//! "dropped" it. Identical specs (seed included) produce byte-identical
//! frame files.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Detection, TrackId};
use crate::io::FrameRecord;
use crate::ontology::AttrValue;
use crate::spatial::{intersection_area, Rect};

/// Failures of scenario generation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
}

/// The scenario family and its kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// A subject car starts `start_gap` behind a reference bike on the +x
    /// axis and closes at `subject_speed − reference_speed` per frame,
    /// crossing at an analytically known frame.
    Overtake {
        subject_speed: f64,
        reference_speed: f64,
        start_gap: f64,
    },
    /// Same lane geometry, equal speeds: the ordering never changes.
    FollowNoOvertake { speed: f64, gap: f64 },
    /// A car drives through a parking slot, crossing the overlap-ratio
    /// threshold on its way in and back below on its way out.
    ParkingEnterExit {
        slot: Rect,
        speed: f64,
        /// The occupancy threshold the ground truth is computed against.
        threshold: f64,
    },
    /// `objects` cars bouncing inside a 320×240 field; each detection is
    /// dropped independently with probability `drop_p`.
    MultiObjectNoise { objects: u32, drop_p: f64 },
}

impl ScenarioKind {
    /// The kind name used by the CLI and in `synthetic:` sources.
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Overtake { .. } => "overtake",
            ScenarioKind::FollowNoOvertake { .. } => "follow_no_overtake",
            ScenarioKind::ParkingEnterExit { .. } => "parking_enter_exit",
            ScenarioKind::MultiObjectNoise { .. } => "multi_object_noise",
        }
    }

    /// Default parameters for a kind named on the command line.
    pub fn with_defaults(name: &str) -> Result<Self, ScenarioError> {
        match name {
            "overtake" => Ok(ScenarioKind::Overtake {
                subject_speed: 6.0,
                reference_speed: 2.0,
                start_gap: 40.0,
            }),
            "follow_no_overtake" => Ok(ScenarioKind::FollowNoOvertake {
                speed: 4.0,
                gap: 30.0,
            }),
            "parking_enter_exit" => Ok(ScenarioKind::ParkingEnterExit {
                slot: Rect::new(60.0, 10.0, 12.0, 6.0),
                speed: 4.0,
                threshold: 0.5,
            }),
            "multi_object_noise" => Ok(ScenarioKind::MultiObjectNoise {
                objects: 4,
                drop_p: 0.2,
            }),
            other => Err(ScenarioError::InvalidSpec(format!(
                "unknown scenario kind '{other}'"
            ))),
        }
    }
}

/// A complete scenario description; equal specs generate equal output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub frames: u32,
    /// Nominal frame rate; timestamps advance by `round(1000 / fps)` ms.
    pub fps: f64,
    pub stream_id: String,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, seed: u64, frames: u32) -> Self {
        ScenarioSpec {
            kind,
            seed,
            frames,
            fps: 30.0,
            stream_id: "P1".to_string(),
        }
    }

    fn period_ms(&self) -> Result<i64, ScenarioError> {
        if !(self.fps > 0.0 && self.fps <= 1000.0) {
            return Err(ScenarioError::InvalidSpec(format!(
                "fps {} outside (0, 1000]",
                self.fps
            )));
        }
        Ok(((1000.0 / self.fps).round() as i64).max(1))
    }

    /// A randomized overtake spec with a crossing guaranteed inside the
    /// frame budget: speeds and gap are sampled, then the gap is clamped so
    /// the analytic crossing frame lands in [2, frames − 2].
    pub fn random_overtake(seed: u64, frames: u32) -> Self {
        assert!(frames >= 8, "need at least 8 frames for a sampled crossing");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reference_speed = rng.random_range(1.0..4.0);
        let closing = rng.random_range(2.0..6.0);
        let subject_speed = reference_speed + closing;
        let k = rng.random_range(2..=frames - 2) as f64;
        // Put the crossing strictly between frames k−1 and k.
        let start_gap = closing * (k - 0.5);
        ScenarioSpec::new(
            ScenarioKind::Overtake {
                subject_speed,
                reference_speed,
                start_gap,
            },
            seed,
            frames,
        )
    }

    /// A randomized no-overtake spec: equal speeds, sampled gap.
    pub fn random_follow(seed: u64, frames: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let speed = rng.random_range(1.0..6.0);
        let gap = rng.random_range(15.0..60.0);
        ScenarioSpec::new(ScenarioKind::FollowNoOvertake { speed, gap }, seed, frames)
    }
}

/// One ground-truth event with its evidence frame range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtEvent {
    /// `overtake`, `slot_full`, or `slot_vacant`.
    pub kind: String,
    /// Tracks involved, overtaker first for overtake events.
    pub tracks: Vec<TrackId>,
    /// Inclusive frame index range of the evidence.
    pub frames: (u32, u32),
    /// The same range in milliseconds.
    pub span_ms: (i64, i64),
}

/// One object's true state at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtObject {
    pub track: TrackId,
    pub class: String,
    pub bbox: Rect,
}

/// The true scene at one frame (before detection drops).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtFrame {
    pub frame: u32,
    pub t_ms: i64,
    pub objects: Vec<GtObject>,
}

/// Analytic ground truth for a generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct GroundTruth {
    pub events: Vec<GtEvent>,
    pub presence: Vec<GtFrame>,
}

impl GroundTruth {
    /// The true objects at a timestamp, if the scenario covers it.
    pub fn objects_at(&self, t_ms: i64) -> Option<&[GtObject]> {
        self.presence
            .iter()
            .find(|f| f.t_ms == t_ms)
            .map(|f| f.objects.as_slice())
    }
}

const CAR_W: f64 = 10.0;
const CAR_H: f64 = 6.0;
const BIKE_W: f64 = 4.0;
const BIKE_H: f64 = 4.0;
const FIELD_W: f64 = 320.0;
const FIELD_H: f64 = 240.0;

fn car_at(cx: f64, cy: f64) -> Rect {
    Rect::new(cx - CAR_W / 2.0, cy - CAR_H / 2.0, CAR_W, CAR_H)
}

fn bike_at(cx: f64, cy: f64) -> Rect {
    Rect::new(cx - BIKE_W / 2.0, cy - BIKE_H / 2.0, BIKE_W, BIKE_H)
}

fn detection(class: &str, bbox: Rect, track: TrackId, color: Option<&str>) -> Detection {
    let mut attrs = BTreeMap::new();
    if let Some(c) = color {
        attrs.insert("color".to_string(), AttrValue::Text(c.to_string()));
    }
    Detection {
        class: class.to_string(),
        bbox,
        conf: 0.9,
        attrs,
        track: Some(track),
    }
}

/// Generates the frames and analytic ground truth for a spec.
pub fn generate_scenario(
    spec: &ScenarioSpec,
) -> Result<(Vec<FrameRecord>, GroundTruth), ScenarioError> {
    if spec.frames < 2 {
        return Err(ScenarioError::InvalidSpec(
            "a scenario needs at least 2 frames".to_string(),
        ));
    }
    let period = spec.period_ms()?;
    match &spec.kind {
        ScenarioKind::Overtake {
            subject_speed,
            reference_speed,
            start_gap,
        } => gen_overtake(spec, period, *subject_speed, *reference_speed, *start_gap),
        ScenarioKind::FollowNoOvertake { speed, gap } => gen_follow(spec, period, *speed, *gap),
        ScenarioKind::ParkingEnterExit {
            slot,
            speed,
            threshold,
        } => gen_parking(spec, period, slot, *speed, *threshold),
        ScenarioKind::MultiObjectNoise { objects, drop_p } => {
            gen_noise(spec, period, *objects, *drop_p)
        }
    }
}

fn gen_overtake(
    spec: &ScenarioSpec,
    period: i64,
    v_subject: f64,
    v_reference: f64,
    gap: f64,
) -> Result<(Vec<FrameRecord>, GroundTruth), ScenarioError> {
    if v_subject <= v_reference {
        return Err(ScenarioError::InvalidSpec(
            "overtake requires subject_speed > reference_speed".to_string(),
        ));
    }
    if gap <= 0.0 {
        return Err(ScenarioError::InvalidSpec(
            "overtake requires a positive start gap".to_string(),
        ));
    }
    // Centroid difference subject − reference is v·i − gap with
    // v = v_subject − v_reference; the crossing frame is the first i with
    // difference ≥ 0.
    let closing = v_subject - v_reference;
    let k = (gap / closing).ceil() as u32;
    if k < 1 || k > spec.frames - 1 {
        return Err(ScenarioError::InvalidSpec(format!(
            "crossing frame {k} outside the budget of {} frames",
            spec.frames
        )));
    }
    let lane_y = 20.0;
    let mut frames = Vec::with_capacity(spec.frames as usize);
    let mut presence = Vec::with_capacity(spec.frames as usize);
    for i in 0..spec.frames {
        let t = i as i64 * period;
        let sx = v_subject * i as f64;
        let rx = gap + v_reference * i as f64;
        let subject = car_at(sx, lane_y);
        let reference = bike_at(rx, lane_y);
        frames.push(FrameRecord {
            stream: spec.stream_id.clone(),
            frame: i as u64,
            t_ms: t,
            detections: vec![
                detection("Car", subject, 1, Some("white")),
                detection("Bike", reference, 2, Some("red")),
            ],
        });
        presence.push(GtFrame {
            frame: i,
            t_ms: t,
            objects: vec![
                GtObject {
                    track: 1,
                    class: "Car".to_string(),
                    bbox: subject,
                },
                GtObject {
                    track: 2,
                    class: "Bike".to_string(),
                    bbox: reference,
                },
            ],
        });
    }
    let gt = GroundTruth {
        events: vec![GtEvent {
            kind: "overtake".to_string(),
            tracks: vec![1, 2],
            frames: (k - 1, k),
            span_ms: ((k - 1) as i64 * period, k as i64 * period),
        }],
        presence,
    };
    Ok((frames, gt))
}

fn gen_follow(
    spec: &ScenarioSpec,
    period: i64,
    speed: f64,
    gap: f64,
) -> Result<(Vec<FrameRecord>, GroundTruth), ScenarioError> {
    if gap <= 0.0 {
        return Err(ScenarioError::InvalidSpec(
            "follow requires a positive gap".to_string(),
        ));
    }
    let lane_y = 20.0;
    let mut frames = Vec::with_capacity(spec.frames as usize);
    let mut presence = Vec::with_capacity(spec.frames as usize);
    for i in 0..spec.frames {
        let t = i as i64 * period;
        let sx = speed * i as f64;
        let rx = gap + speed * i as f64;
        let subject = car_at(sx, lane_y);
        let reference = bike_at(rx, lane_y);
        frames.push(FrameRecord {
            stream: spec.stream_id.clone(),
            frame: i as u64,
            t_ms: t,
            detections: vec![
                detection("Car", subject, 1, Some("black")),
                detection("Bike", reference, 2, Some("blue")),
            ],
        });
        presence.push(GtFrame {
            frame: i,
            t_ms: t,
            objects: vec![
                GtObject {
                    track: 1,
                    class: "Car".to_string(),
                    bbox: subject,
                },
                GtObject {
                    track: 2,
                    class: "Bike".to_string(),
                    bbox: reference,
                },
            ],
        });
    }
    Ok((frames, GroundTruth { events: vec![], presence }))
}

fn gen_parking(
    spec: &ScenarioSpec,
    period: i64,
    slot: &Rect,
    speed: f64,
    threshold: f64,
) -> Result<(Vec<FrameRecord>, GroundTruth), ScenarioError> {
    if !slot.has_area() {
        return Err(ScenarioError::InvalidSpec("slot must have area".to_string()));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ScenarioError::InvalidSpec(format!(
            "threshold {threshold} outside (0, 1]"
        )));
    }
    if speed <= 0.0 {
        return Err(ScenarioError::InvalidSpec("speed must be positive".to_string()));
    }
    // The car shares the slot's vertical extent and drives through it in x.
    let car_y = slot.y + slot.h / 2.0;
    let car_cx = |i: u32| speed * i as f64 + CAR_W / 2.0;
    let slot_track: TrackId = 100;
    let car_track: TrackId = 1;

    // Ground-truth transitions straight from the trajectory: first frame
    // with ratio strictly above the threshold, then first frame back at or
    // below it.
    let ratio_at = |i: u32| {
        let car = car_at(car_cx(i), car_y);
        intersection_area(slot, &car) / slot.area()
    };
    let mut k_in: Option<u32> = None;
    let mut k_out: Option<u32> = None;
    for i in 0..spec.frames {
        let above = ratio_at(i) > threshold;
        if k_in.is_none() && above {
            k_in = Some(i);
        }
        if k_in.is_some() && k_out.is_none() && !above {
            k_out = Some(i);
        }
    }
    let (k_in, k_out) = match (k_in, k_out) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(ScenarioError::InvalidSpec(format!(
                "car never completes an enter/exit of the slot within {} frames",
                spec.frames
            )))
        }
    };

    let mut frames = Vec::with_capacity(spec.frames as usize);
    let mut presence = Vec::with_capacity(spec.frames as usize);
    for i in 0..spec.frames {
        let t = i as i64 * period;
        let car = car_at(car_cx(i), car_y);
        frames.push(FrameRecord {
            stream: spec.stream_id.clone(),
            frame: i as u64,
            t_ms: t,
            detections: vec![
                detection("Slot", *slot, slot_track, None),
                detection("Car", car, car_track, Some("white")),
            ],
        });
        presence.push(GtFrame {
            frame: i,
            t_ms: t,
            objects: vec![
                GtObject {
                    track: slot_track,
                    class: "Slot".to_string(),
                    bbox: *slot,
                },
                GtObject {
                    track: car_track,
                    class: "Car".to_string(),
                    bbox: car,
                },
            ],
        });
    }
    let gt = GroundTruth {
        events: vec![
            GtEvent {
                kind: "slot_full".to_string(),
                tracks: vec![car_track, slot_track],
                frames: (k_in, k_in),
                span_ms: (k_in as i64 * period, k_in as i64 * period),
            },
            GtEvent {
                kind: "slot_vacant".to_string(),
                tracks: vec![car_track, slot_track],
                frames: (k_out, k_out),
                span_ms: (k_out as i64 * period, k_out as i64 * period),
            },
        ],
        presence,
    };
    Ok((frames, gt))
}

fn gen_noise(
    spec: &ScenarioSpec,
    period: i64,
    objects: u32,
    drop_p: f64,
) -> Result<(Vec<FrameRecord>, GroundTruth), ScenarioError> {
    if objects == 0 {
        return Err(ScenarioError::InvalidSpec("need at least one object".to_string()));
    }
    if !(0.0..1.0).contains(&drop_p) {
        return Err(ScenarioError::InvalidSpec(format!(
            "drop probability {drop_p} outside [0, 1)"
        )));
    }
    let colors = ["white", "black", "red", "blue"];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    struct Body {
        cx: f64,
        cy: f64,
        vx: f64,
        vy: f64,
        color: &'static str,
    }
    let mut bodies: Vec<Body> = (0..objects)
        .map(|_| Body {
            cx: rng.random_range(CAR_W..FIELD_W - CAR_W),
            cy: rng.random_range(CAR_H..FIELD_H - CAR_H),
            vx: rng.random_range(-5.0..5.0),
            vy: rng.random_range(-3.0..3.0),
            color: colors[rng.random_range(0..colors.len())],
        })
        .collect();

    let mut frames = Vec::with_capacity(spec.frames as usize);
    let mut presence = Vec::with_capacity(spec.frames as usize);
    for i in 0..spec.frames {
        let t = i as i64 * period;
        let mut detections = Vec::new();
        let mut objects_now = Vec::new();
        for (idx, body) in bodies.iter_mut().enumerate() {
            let track = idx as TrackId + 1;
            let bbox = car_at(body.cx, body.cy);
            objects_now.push(GtObject {
                track,
                class: "Car".to_string(),
                bbox,
            });
            // The drop draw happens for every (frame, object) regardless of
            // outcome so the stream stays deterministic per seed.
            let dropped = rng.random_range(0.0..1.0) < drop_p;
            if !dropped {
                detections.push(detection("Car", bbox, track, Some(body.color)));
            }
            body.cx += body.vx;
            body.cy += body.vy;
            if body.cx < CAR_W / 2.0 || body.cx > FIELD_W - CAR_W / 2.0 {
                body.vx = -body.vx;
                body.cx += 2.0 * body.vx;
            }
            if body.cy < CAR_H / 2.0 || body.cy > FIELD_H - CAR_H / 2.0 {
                body.vy = -body.vy;
                body.cy += 2.0 * body.vy;
            }
        }
        frames.push(FrameRecord {
            stream: spec.stream_id.clone(),
            frame: i as u64,
            t_ms: t,
            detections,
        });
        presence.push(GtFrame {
            frame: i,
            t_ms: t,
            objects: objects_now,
        });
    }
    Ok((frames, GroundTruth { events: vec![], presence }))
}

/// Serializes ground truth as pretty JSON (the `--gt` output of `gen`).
pub fn save_ground_truth(gt: &GroundTruth) -> String {
    serde_json::to_string_pretty(gt).expect("ground truth always serializes")
}

/// Parses ground truth saved by [`save_ground_truth`].
pub fn parse_ground_truth(text: &str) -> Result<GroundTruth, serde_json::Error> {
    serde_json::from_str(text)
}
