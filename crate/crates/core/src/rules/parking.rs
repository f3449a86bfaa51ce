//! The built-in parking rule: slot occupancy transitions within a window
//! state.
//!
//! A slot is *occupied* at a frame iff some object of the configured class
//! covers strictly more than the threshold fraction of the slot's area
//! (intersection over slot area — the slot is the reference operand).
//! Scanning frames in order, each change of a slot's occupancy emits an
//! event: `SlotFull` on false → true, `SlotVacant` on true → false. The
//! caller may pass the occupancy carried out of the previous window so a
//! slot already full at the boundary does not re-emit `SlotFull` on the
//! first frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{FrameGraph, TrackId};
use crate::ontology::OntologySchema;
use crate::spatial::{intersection_area, Rect};
use crate::temporal::TimeSpan;

use super::RuleError;

/// Configuration for the parking evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingConfig {
    /// Monitored slots: id → fixed slot rectangle. Slots must have area.
    pub slots: BTreeMap<String, Rect>,
    /// Class of objects that can occupy a slot.
    pub object_class: String,
    /// Occupancy threshold: the covered fraction of the slot's area must
    /// strictly exceed this. Must lie in (0, 1]; default 0.5.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.5
}

impl ParkingConfig {
    pub fn new(object_class: &str) -> Self {
        ParkingConfig {
            slots: BTreeMap::new(),
            object_class: object_class.to_string(),
            threshold: default_threshold(),
        }
    }

    pub fn with_slot(mut self, slot_id: &str, rect: Rect) -> Self {
        self.slots.insert(slot_id.to_string(), rect);
        self
    }

    fn validate(&self) -> Result<(), RuleError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(RuleError::InvalidConfig(format!(
                "parking threshold {} outside (0, 1]",
                self.threshold
            )));
        }
        for (id, rect) in &self.slots {
            if !rect.has_area() {
                return Err(RuleError::InvalidConfig(format!(
                    "slot '{}' has no area",
                    id
                )));
            }
        }
        Ok(())
    }
}

/// The kind of occupancy transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyKind {
    SlotFull,
    SlotVacant,
}

/// One occupancy transition of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyEvent {
    pub slot_id: String,
    pub kind: OccupancyKind,
    pub t_ms: i64,
    /// The occupying track at a `SlotFull` (None for untracked occupants
    /// and for `SlotVacant`).
    pub occupant: Option<TrackId>,
    /// The best covered fraction of the slot at the event frame.
    pub ratio: f64,
    /// The span of the window state that produced the event.
    pub window: TimeSpan,
}

/// Occupancy of each configured slot, carried across window boundaries.
pub type SlotOccupancy = BTreeMap<String, bool>;

/// Evaluates the parking rule over a window state.
///
/// Returns the ordered occupancy transitions and the final per-slot
/// occupancy (to carry into the next window). `carry_in` seeds the
/// occupancy at the window boundary; slots absent from it start vacant.
/// Errors on an empty state, an unknown object class, or an invalid
/// config.
pub fn eval_parking(
    frames: &[&FrameGraph],
    config: &ParkingConfig,
    carry_in: Option<&SlotOccupancy>,
    schema: &OntologySchema,
) -> Result<(Vec<OccupancyEvent>, SlotOccupancy), RuleError> {
    if frames.is_empty() {
        return Err(RuleError::EmptyState);
    }
    config.validate()?;
    if schema.class(&config.object_class).is_none() {
        return Err(RuleError::UnknownClass(config.object_class.clone()));
    }

    let window = super::state_span(frames);
    let mut occupancy: SlotOccupancy = config
        .slots
        .keys()
        .map(|id| {
            let seeded = carry_in.and_then(|c| c.get(id)).copied().unwrap_or(false);
            (id.clone(), seeded)
        })
        .collect();

    let mut events = Vec::new();
    for frame in frames {
        for (slot_id, slot_rect) in &config.slots {
            let (best_ratio, best_track) = best_cover(frame, slot_rect, config, schema);
            let now_occupied = best_ratio > config.threshold;
            let was_occupied = occupancy[slot_id];
            if now_occupied != was_occupied {
                events.push(OccupancyEvent {
                    slot_id: slot_id.clone(),
                    kind: if now_occupied {
                        OccupancyKind::SlotFull
                    } else {
                        OccupancyKind::SlotVacant
                    },
                    t_ms: frame.timestamp_ms,
                    occupant: if now_occupied { best_track } else { None },
                    ratio: best_ratio,
                    window,
                });
                occupancy.insert(slot_id.clone(), now_occupied);
            }
        }
    }
    Ok((events, occupancy))
}

/// The best covered fraction of a slot at one frame and the covering
/// track. Ties prefer tracked objects, then the smallest track id.
fn best_cover(
    frame: &FrameGraph,
    slot: &Rect,
    config: &ParkingConfig,
    schema: &OntologySchema,
) -> (f64, Option<TrackId>) {
    let slot_area = slot.area();
    let mut best_ratio = 0.0_f64;
    let mut best_track: Option<TrackId> = None;
    for node in &frame.nodes {
        if !schema
            .is_subclass(&node.class, &config.object_class)
            .unwrap_or(false)
        {
            continue;
        }
        let ratio = intersection_area(slot, &node.geometry) / slot_area;
        let better = ratio > best_ratio
            || (ratio == best_ratio
                && ratio > 0.0
                && track_rank(node.track_id) < track_rank(best_track));
        if better {
            best_ratio = ratio;
            best_track = node.track_id;
        }
    }
    (best_ratio, best_track)
}

/// Orders occupant candidates at equal cover: tracked ids ascending, then
/// untracked.
fn track_rank(track: Option<TrackId>) -> (bool, TrackId) {
    match track {
        Some(id) => (false, id),
        None => (true, 0),
    }
}
