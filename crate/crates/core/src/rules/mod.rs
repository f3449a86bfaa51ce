//! Spatiotemporal pattern rules and their evaluators.
//!
//! A rule is matched against a *window state* — an ordered slice of frame
//! graphs — and produces zero or more [`RuleMatch`]es, each binding the
//! rule's roles to concrete tracks over a time span. Two rules ship built
//! in: `overtake` (a back/front flip between two moving objects, see
//! [`overtake::eval_overtake`]) and `parking` (slot occupancy transitions,
//! see [`parking::eval_parking`]). Arbitrary rules are expressed as
//! [`PatternRule`]s: a boolean expression body quantified over role
//! bindings at a per-frame, frame-pair, or whole-window scope.
//!
//! Role binding requires object identity across evaluations, so every node
//! of a role's class must carry a `track_id`; states containing untracked
//! candidates are rejected with [`RuleError::MissingTracks`] rather than
//! silently skipped.

pub mod overtake;
pub mod parking;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FrameGraph, ObjectNode, TrackId};
use crate::ontology::OntologySchema;
use crate::spatial::SpatialError;
use crate::temporal::{
    eval_bool_expr, Bindings, BoolExpr, BoundObject, EvalContext, EvalError, TimeSpan,
};

pub use overtake::{eval_overtake, overtake_rule, OvertakeConfig};
pub use parking::{eval_parking, OccupancyEvent, OccupancyKind, ParkingConfig, SlotOccupancy};

/// Failures of rule registration or evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    /// Evaluators require at least one frame.
    #[error("cannot evaluate a rule over an empty window state")]
    EmptyState,
    /// A node of a role class carries no track id, so role bindings cannot
    /// be formed.
    #[error("nodes of class '{class}' lack track ids; role binding requires tracked objects")]
    MissingTracks { class: String },
    /// The registry holds no rule of this name.
    #[error("unknown rule '{0}'")]
    UnknownRule(String),
    /// A rule was registered under an already-taken name.
    #[error("a rule named '{0}' is already registered")]
    DuplicateRule(String),
    /// A role or config references a class the schema does not know.
    #[error("unknown class '{0}' in rule configuration")]
    UnknownClass(String),
    /// A rule config fails its own invariants (threshold range, degenerate
    /// slot geometry, …).
    #[error("invalid rule configuration: {0}")]
    InvalidConfig(String),
    /// A pattern rule body fails static validation against its declaration.
    #[error("invalid pattern rule: {0}")]
    InvalidRule(String),
    /// A spatial computation inside the rule body failed.
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    /// Evaluation of the rule body failed.
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One match of a rule against a window state: the rule's roles bound to
/// tracks, the span of the evidence frames, and per-frame evidence values
/// (back flags for overtake, `1.0` markers for generic patterns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMatch {
    pub rule: String,
    pub bound: BTreeMap<String, TrackId>,
    pub span: TimeSpan,
    pub detail: Vec<(i64, f64)>,
}

/// How much of the window a pattern rule body sees per evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternScope {
    /// The body is evaluated once per frame.
    PerFrame,
    /// The body is evaluated once per adjacent frame pair, with `First` and
    /// `Second` time references available.
    FramePair,
    /// The body is evaluated once over the whole state.
    Window,
}

/// A subscriber-defined rule: named roles (variable → class) and a boolean
/// expression body evaluated at some scope. Roles are bound to tracked
/// objects present in every frame of the scope; bindings must use distinct
/// tracks. Objects referenced only by `ANY`/`EVERY` quantifiers inside the
/// body are not roles and need no tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRule {
    pub name: String,
    pub roles: Vec<(String, String)>,
    pub scope: PatternScope,
    pub body: BoolExpr,
}

impl PatternRule {
    /// Checks the body against the declaration: every free variable must be
    /// a declared role, and two-frame time references require at least
    /// frame-pair scope.
    pub fn validate(&self) -> Result<(), RuleError> {
        let declared: BTreeSet<&str> = self.roles.iter().map(|(var, _)| var.as_str()).collect();
        if declared.len() != self.roles.len() {
            return Err(RuleError::InvalidRule(format!(
                "rule '{}' declares a role variable twice",
                self.name
            )));
        }
        for var in self.body.unbound_vars() {
            if !declared.contains(var.as_str()) {
                return Err(RuleError::InvalidRule(format!(
                    "rule '{}' references undeclared variable '{}'",
                    self.name, var
                )));
            }
        }
        if self.scope == PatternScope::PerFrame && self.body.uses_second_frame() {
            return Err(RuleError::InvalidRule(format!(
                "rule '{}' uses a second-frame reference under per-frame scope",
                self.name
            )));
        }
        Ok(())
    }
}

/// A registered rule: one of the two built-in evaluators or a pattern rule.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    BuiltinOvertake,
    BuiltinParking,
    Pattern(PatternRule),
}

/// Names of the rules with built-in evaluators.
pub fn builtin_rule_names() -> BTreeSet<String> {
    ["overtake", "parking"].iter().map(|s| s.to_string()).collect()
}

/// The rule registry: relation classes in an ontology must name a rule
/// registered here. Construction seeds the two built-ins.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRegistry {
    rules: BTreeMap<String, RuleKind>,
}

impl Default for RuleRegistry {
    fn default() -> Self {
        let mut rules = BTreeMap::new();
        rules.insert("overtake".to_string(), RuleKind::BuiltinOvertake);
        rules.insert("parking".to_string(), RuleKind::BuiltinParking);
        RuleRegistry { rules }
    }
}

impl RuleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a pattern rule after validating it. Names are unique
    /// across built-ins and patterns.
    pub fn register(&mut self, rule: PatternRule) -> Result<(), RuleError> {
        rule.validate()?;
        if self.rules.contains_key(&rule.name) {
            return Err(RuleError::DuplicateRule(rule.name));
        }
        self.rules.insert(rule.name.clone(), RuleKind::Pattern(rule));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&RuleKind, RuleError> {
        self.rules
            .get(name)
            .ok_or_else(|| RuleError::UnknownRule(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.rules.contains_key(name)
    }

    /// All registered rule names, for ontology relation validation.
    pub fn names(&self) -> BTreeSet<String> {
        self.rules.keys().cloned().collect()
    }
}

/// The closed span of a window state (first to last frame timestamp).
pub(crate) fn state_span(frames: &[&FrameGraph]) -> TimeSpan {
    TimeSpan {
        start_ms: frames[0].timestamp_ms,
        end_ms: frames[frames.len() - 1].timestamp_ms,
    }
}

/// Per-track presence of a class's objects across the state: for each
/// track, one entry per frame (`None` where the track is absent). Errors if
/// any node of the class is untracked. Class membership is subclass-aware.
pub(crate) fn tracked_by_class<'a>(
    frames: &[&'a FrameGraph],
    class: &str,
    schema: &OntologySchema,
) -> Result<BTreeMap<TrackId, Vec<Option<&'a ObjectNode>>>, RuleError> {
    if schema.class(class).is_none() {
        return Err(RuleError::UnknownClass(class.to_string()));
    }
    let mut out: BTreeMap<TrackId, Vec<Option<&'a ObjectNode>>> = BTreeMap::new();
    for (i, frame) in frames.iter().enumerate() {
        for node in &frame.nodes {
            if !schema.is_subclass(&node.class, class).unwrap_or(false) {
                continue;
            }
            let track = node.track_id.ok_or_else(|| RuleError::MissingTracks {
                class: node.class.clone(),
            })?;
            let lane = out.entry(track).or_insert_with(|| vec![None; frames.len()]);
            lane[i] = Some(node);
        }
    }
    Ok(out)
}

/// Evaluates a pattern rule against a window state.
///
/// The scope slices the state into evaluation units (frames, adjacent
/// pairs, or the whole window); within each unit, roles are bound to every
/// combination of distinct tracks whose objects appear in *all* frames of
/// the unit, and the body is evaluated under those bindings. Matches carry
/// the unit's span. Allen `WindowSpan` references resolve to the span of
/// the whole state, not the unit.
pub fn eval_pattern(
    rule: &PatternRule,
    frames: &[&FrameGraph],
    schema: &OntologySchema,
) -> Result<Vec<RuleMatch>, RuleError> {
    if frames.is_empty() {
        return Err(RuleError::EmptyState);
    }
    rule.validate()?;
    let window_span = state_span(frames).to_interval();
    let mut matches = Vec::new();
    match rule.scope {
        PatternScope::PerFrame => {
            for i in 0..frames.len() {
                eval_pattern_unit(rule, frames, &frames[i..=i], window_span, schema, &mut matches)?;
            }
        }
        PatternScope::FramePair => {
            for i in 0..frames.len().saturating_sub(1) {
                eval_pattern_unit(
                    rule,
                    frames,
                    &frames[i..=i + 1],
                    window_span,
                    schema,
                    &mut matches,
                )?;
            }
        }
        PatternScope::Window => {
            eval_pattern_unit(rule, frames, frames, window_span, schema, &mut matches)?;
        }
    }
    Ok(matches)
}

fn eval_pattern_unit(
    rule: &PatternRule,
    state: &[&FrameGraph],
    unit: &[&FrameGraph],
    window_span: Option<crate::temporal::Interval>,
    schema: &OntologySchema,
    out: &mut Vec<RuleMatch>,
) -> Result<(), RuleError> {
    // Candidates per role: tracks of the role class present in every frame
    // of the unit, in track order for deterministic enumeration.
    let mut candidates: Vec<Vec<(TrackId, BoundObject)>> = Vec::with_capacity(rule.roles.len());
    for (_, class) in &rule.roles {
        let lanes = tracked_by_class(unit, class, schema)?;
        let mut role_candidates = Vec::new();
        for (track, lane) in lanes {
            if lane.iter().all(|slot| slot.is_some()) {
                role_candidates.push((
                    track,
                    BoundObject {
                        track: Some(track),
                        per_frame: lane,
                    },
                ));
            }
        }
        candidates.push(role_candidates);
    }

    let ctx = EvalContext {
        schema,
        frames: unit.to_vec(),
        window_span,
        enrichment: true,
    };
    let _ = state; // the whole state informs only window_span, computed by the caller

    let mut chosen: Vec<usize> = Vec::with_capacity(rule.roles.len());
    bind_roles(rule, &candidates, &ctx, unit, &mut chosen, out)?;
    Ok(())
}

/// Depth-first enumeration of role bindings (distinct tracks), evaluating
/// the body at each complete assignment.
fn bind_roles(
    rule: &PatternRule,
    candidates: &[Vec<(TrackId, BoundObject)>],
    ctx: &EvalContext,
    unit: &[&FrameGraph],
    chosen: &mut Vec<usize>,
    out: &mut Vec<RuleMatch>,
) -> Result<(), RuleError> {
    if chosen.len() == rule.roles.len() {
        let mut bindings: Bindings = BTreeMap::new();
        let mut bound = BTreeMap::new();
        for (role_idx, &cand_idx) in chosen.iter().enumerate() {
            let (track, ref obj) = candidates[role_idx][cand_idx];
            bindings.insert(rule.roles[role_idx].0.clone(), obj.clone());
            bound.insert(rule.roles[role_idx].0.clone(), track);
        }
        if eval_bool_expr(&rule.body, ctx, &bindings)? {
            let span = state_span(unit);
            out.push(RuleMatch {
                rule: rule.name.clone(),
                bound,
                span,
                detail: unit.iter().map(|f| (f.timestamp_ms, 1.0)).collect(),
            });
        }
        return Ok(());
    }
    let role_idx = chosen.len();
    for (cand_idx, (track, _)) in candidates[role_idx].iter().enumerate() {
        let duplicate = chosen
            .iter()
            .enumerate()
            .any(|(prev_role, &prev_idx)| candidates[prev_role][prev_idx].0 == *track);
        if duplicate {
            continue;
        }
        chosen.push(cand_idx);
        bind_roles(rule, candidates, ctx, unit, chosen, out)?;
        chosen.pop();
    }
    Ok(())
}
