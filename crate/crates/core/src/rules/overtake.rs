//! The built-in overtake rule: a strict back/front flip between two
//! tracked objects along a frame-of-reference axis.
//!
//! For a candidate pair (subject of `class_a`, reference of `class_b`) the
//! back flag at a frame is `bsf(BackAlong(axis))`: true iff the subject's
//! centroid projects strictly behind the reference's on the front axis.
//! Scanning consecutive co-occurrence frames, any change of the flag —
//! equivalently, the two flags failing an XNOR — is an overtake event: flag
//! `true → false` means the subject moved from behind to not-behind, i.e.
//! the subject overtook; `false → true` means the reference did. Both
//! directions are reported, with the overtaker named in the binding under
//! the `overtaker` role.
//!
//! Short detector dropouts are bridged: two co-occurrence frames count as
//! consecutive when at most `max_gap` window frames are missing between
//! them. Mirror-symmetric candidate pairs (possible when the two role
//! classes overlap) are collapsed to one match per unordered pair and
//! transition frame, keeping the orientation whose subject is the
//! overtaker.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{FrameGraph, ObjectNode, TrackId};
use crate::ontology::OntologySchema;
use crate::spatial::{bsf, Axis, Geometry, SpatialPredicate};
use crate::temporal::TimeSpan;

use super::{tracked_by_class, PatternRule, PatternScope, RuleError, RuleMatch};

/// Configuration for the overtake evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvertakeConfig {
    /// Class of the subject role.
    pub class_a: String,
    /// Class of the reference role.
    pub class_b: String,
    /// Frame-of-reference front axis (default +x).
    #[serde(default)]
    pub axis: Axis,
    /// Maximum number of missing frames bridged between two co-occurrence
    /// frames (default 2).
    #[serde(default = "default_max_gap")]
    pub max_gap: u32,
}

fn default_max_gap() -> u32 {
    2
}

impl OvertakeConfig {
    pub fn new(class_a: &str, class_b: &str) -> Self {
        OvertakeConfig {
            class_a: class_a.to_string(),
            class_b: class_b.to_string(),
            axis: Axis::default(),
            max_gap: default_max_gap(),
        }
    }
}

/// The subject's back flag relative to the reference at one frame.
fn back_flag(subject: &ObjectNode, reference: &ObjectNode, axis: Axis) -> Result<bool, RuleError> {
    Ok(bsf(
        &SpatialPredicate::BackAlong(axis),
        &Geometry::Rect(subject.geometry),
        &Geometry::Rect(reference.geometry),
    )?)
}

/// Evaluates the overtake rule over a window state.
///
/// Produces at most one match per unordered track pair and transition
/// frame; each match spans the two evidence frames and records the back
/// flags as detail (`1.0` behind, `0.0` not behind). Errors on an empty
/// state and on untracked nodes of either role class.
pub fn eval_overtake(
    frames: &[&FrameGraph],
    config: &OvertakeConfig,
    schema: &OntologySchema,
) -> Result<Vec<RuleMatch>, RuleError> {
    if frames.is_empty() {
        return Err(RuleError::EmptyState);
    }
    let tracks_a = tracked_by_class(frames, &config.class_a, schema)?;
    let tracks_b = tracked_by_class(frames, &config.class_b, schema)?;

    // Keyed by (unordered pair, transition frame timestamp) to collapse
    // mirror candidates; the preferred orientation names the overtaker as
    // subject.
    let mut chosen: BTreeMap<(TrackId, TrackId, i64), RuleMatch> = BTreeMap::new();

    for (&subject, lane_a) in &tracks_a {
        for (&reference, lane_b) in &tracks_b {
            if subject == reference {
                continue;
            }
            let co_occur: Vec<usize> = (0..frames.len())
                .filter(|&i| lane_a[i].is_some() && lane_b[i].is_some())
                .collect();
            for pair in co_occur.windows(2) {
                let (i, j) = (pair[0], pair[1]);
                if j - i > config.max_gap as usize + 1 {
                    continue;
                }
                let b_i = back_flag(lane_a[i].unwrap(), lane_b[i].unwrap(), config.axis)?;
                let b_j = back_flag(lane_a[j].unwrap(), lane_b[j].unwrap(), config.axis)?;
                if b_i == b_j {
                    continue;
                }
                let overtaker = if b_i { subject } else { reference };
                let (t_i, t_j) = (frames[i].timestamp_ms, frames[j].timestamp_ms);
                let m = RuleMatch {
                    rule: "overtake".to_string(),
                    bound: [
                        ("subject".to_string(), subject),
                        ("reference".to_string(), reference),
                        ("overtaker".to_string(), overtaker),
                    ]
                    .into_iter()
                    .collect(),
                    span: TimeSpan::new(t_i, t_j).expect("frame timestamps strictly increase"),
                    detail: vec![(t_i, b_i as u8 as f64), (t_j, b_j as u8 as f64)],
                };
                let key = (subject.min(reference), subject.max(reference), t_i);
                match chosen.get(&key) {
                    None => {
                        chosen.insert(key, m);
                    }
                    Some(existing) => {
                        // Prefer the orientation where the subject overtook.
                        let existing_preferred =
                            existing.bound["subject"] == existing.bound["overtaker"];
                        if !existing_preferred && overtaker == subject {
                            chosen.insert(key, m);
                        }
                    }
                }
            }
        }
    }

    let mut matches: Vec<RuleMatch> = chosen.into_values().collect();
    matches.sort_by(|a, b| {
        (a.span, &a.bound["subject"], &a.bound["reference"])
            .cmp(&(b.span, &b.bound["subject"], &b.bound["reference"]))
    });
    Ok(matches)
}

/// The overtake rule re-expressed as a generic pattern rule: frame-pair
/// scope, body `NOT(XNOR(back@first, back@second))`. Matches the built-in
/// evaluator on gap-free states with distinct role classes (the generic
/// path has no dropout bridging and no mirror collapsing).
pub fn overtake_rule(config: &OvertakeConfig) -> PatternRule {
    use crate::temporal::{BoolExpr, GeomRef, Leaf, TimeRef};
    let back_at = |at: TimeRef| {
        BoolExpr::leaf(Leaf::Spatial {
            predicate: SpatialPredicate::BackAlong(config.axis),
            a: GeomRef::Var("subject".to_string()),
            b: GeomRef::Var("reference".to_string()),
            at,
        })
    };
    PatternRule {
        name: "overtake_pattern".to_string(),
        roles: vec![
            ("subject".to_string(), config.class_a.clone()),
            ("reference".to_string(), config.class_b.clone()),
        ],
        scope: PatternScope::FramePair,
        body: BoolExpr::not(BoolExpr::xnor(back_at(TimeRef::First), back_at(TimeRef::Second))),
    }
}
