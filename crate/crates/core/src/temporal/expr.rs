//! The logical expression layer pattern rules are composed from: leaves are
//! boolean spatial function calls, metric comparisons, and Allen tests;
//! operators are the full connective set plus ANY/EVERY quantifiers binding
//! object variables over a frame scope.
//!
//! Both operands of a binary connective are always evaluated — no
//! short-circuiting — so error surfacing does not depend on operand values.
//! A leaf that references an object absent from the referenced frame is
//! false; candidate enumeration for quantifiers never produces such
//! bindings, so this only matters for hand-built bindings.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::graph::{FrameGraph, ObjectNode, TrackId};
use crate::ontology::OntologySchema;
use crate::spatial::{bsf, msf, Geometry, MetricKind, SpatialPredicate};

use super::interval::{allen, AllenRelation, Interval};

/// Expression evaluation failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable {0:?}")]
    UnboundVariable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

/// Which frame of the evaluation scope a leaf reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRef {
    /// The first (oldest) frame in scope — the only frame in a per-frame
    /// scope.
    First,
    /// The second frame; requires a scope of at least two frames.
    Second,
    /// The most recent frame in scope.
    Last,
}

/// A geometry operand: a bound object variable or a literal geometry (e.g.
/// a fixed region of interest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeomRef {
    Var(String),
    Lit(Geometry),
}

impl GeomRef {
    pub fn var(name: &str) -> GeomRef {
        GeomRef::Var(name.to_string())
    }
}

/// Comparison operator for metric leaves. Equality is exact — thresholds
/// are author-written literals, not computed quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
        }
    }
}

/// An interval operand for Allen leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IntervalRef {
    /// The span of the whole window state under evaluation.
    WindowSpan,
    /// First-to-last appearance of the named object's track within scope;
    /// needs at least two distinct timestamps to form a proper interval.
    TrackSpan(String),
    Literal(Interval),
}

/// An atomic test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Leaf {
    /// Boolean spatial function call at one frame of the scope.
    Spatial {
        predicate: SpatialPredicate,
        a: GeomRef,
        b: GeomRef,
        at: TimeRef,
    },
    /// Metric spatial function compared against a threshold.
    Metric {
        metric: MetricKind,
        a: GeomRef,
        b: GeomRef,
        at: TimeRef,
        cmp: Cmp,
        value: f64,
    },
    /// Allen relation test between two intervals.
    Allen {
        relation: AllenRelation,
        a: IntervalRef,
        b: IntervalRef,
    },
}

/// The expression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoolExpr {
    Const(bool),
    Leaf(Box<Leaf>),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Nor(Box<BoolExpr>, Box<BoolExpr>),
    Xor(Box<BoolExpr>, Box<BoolExpr>),
    Xnor(Box<BoolExpr>, Box<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
    Iff(Box<BoolExpr>, Box<BoolExpr>),
    /// ∃ var of class in the scope's candidate set: body.
    Any {
        var: String,
        class: String,
        body: Box<BoolExpr>,
    },
    /// ∀ var of class in the scope's candidate set: body.
    Every {
        var: String,
        class: String,
        body: Box<BoolExpr>,
    },
}

impl BoolExpr {
    pub fn leaf(l: Leaf) -> BoolExpr {
        BoolExpr::Leaf(Box::new(l))
    }
    pub fn not(e: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(e))
    }
    pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }
    pub fn nor(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Nor(Box::new(a), Box::new(b))
    }
    pub fn xor(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Xor(Box::new(a), Box::new(b))
    }
    pub fn xnor(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Xnor(Box::new(a), Box::new(b))
    }
    pub fn implies(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Iff(Box::new(a), Box::new(b))
    }
    pub fn any(var: &str, class: &str, body: BoolExpr) -> BoolExpr {
        BoolExpr::Any {
            var: var.to_string(),
            class: class.to_string(),
            body: Box::new(body),
        }
    }
    pub fn every(var: &str, class: &str, body: BoolExpr) -> BoolExpr {
        BoolExpr::Every {
            var: var.to_string(),
            class: class.to_string(),
            body: Box::new(body),
        }
    }

    /// Variables read anywhere in the tree that no enclosing quantifier
    /// binds; the rule roles must cover exactly these.
    pub fn unbound_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        collect_unbound(self, &mut bound, &mut out);
        out
    }

    /// True when any leaf reads the second frame of the scope, which makes
    /// the expression unusable in a single-frame scope.
    pub fn uses_second_frame(&self) -> bool {
        let mut found = false;
        visit_leaves(self, &mut |leaf| {
            let at = match leaf {
                Leaf::Spatial { at, .. } | Leaf::Metric { at, .. } => Some(*at),
                Leaf::Allen { .. } => None,
            };
            if at == Some(TimeRef::Second) {
                found = true;
            }
        });
        found
    }
}

fn visit_leaves(expr: &BoolExpr, f: &mut impl FnMut(&Leaf)) {
    match expr {
        BoolExpr::Const(_) => {}
        BoolExpr::Leaf(l) => f(l),
        BoolExpr::Not(e) => visit_leaves(e, f),
        BoolExpr::And(a, b)
        | BoolExpr::Or(a, b)
        | BoolExpr::Nor(a, b)
        | BoolExpr::Xor(a, b)
        | BoolExpr::Xnor(a, b)
        | BoolExpr::Implies(a, b)
        | BoolExpr::Iff(a, b) => {
            visit_leaves(a, f);
            visit_leaves(b, f);
        }
        BoolExpr::Any { body, .. } | BoolExpr::Every { body, .. } => visit_leaves(body, f),
    }
}

fn collect_unbound(expr: &BoolExpr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    let check = |name: &String, bound: &[String], out: &mut BTreeSet<String>| {
        if !bound.contains(name) {
            out.insert(name.clone());
        }
    };
    match expr {
        BoolExpr::Const(_) => {}
        BoolExpr::Leaf(l) => {
            let geo = |g: &GeomRef, out: &mut BTreeSet<String>| {
                if let GeomRef::Var(name) = g {
                    check(name, bound, out);
                }
            };
            match l.as_ref() {
                Leaf::Spatial { a, b, .. } | Leaf::Metric { a, b, .. } => {
                    geo(a, out);
                    geo(b, out);
                }
                Leaf::Allen { a, b, .. } => {
                    for iv in [a, b] {
                        if let IntervalRef::TrackSpan(name) = iv {
                            check(name, bound, out);
                        }
                    }
                }
            }
        }
        BoolExpr::Not(e) => collect_unbound(e, bound, out),
        BoolExpr::And(a, b)
        | BoolExpr::Or(a, b)
        | BoolExpr::Nor(a, b)
        | BoolExpr::Xor(a, b)
        | BoolExpr::Xnor(a, b)
        | BoolExpr::Implies(a, b)
        | BoolExpr::Iff(a, b) => {
            collect_unbound(a, bound, out);
            collect_unbound(b, bound, out);
        }
        BoolExpr::Any { var, body, .. } | BoolExpr::Every { var, body, .. } => {
            bound.push(var.clone());
            collect_unbound(body, bound, out);
            bound.pop();
        }
    }
}

/// The frame scope an expression is evaluated against.
pub struct EvalContext<'a> {
    pub schema: &'a OntologySchema,
    /// In-scope frames, oldest first: one for a per-frame rule, two for a
    /// frame-pair rule, the whole state for a window rule.
    pub frames: Vec<&'a FrameGraph>,
    /// Span of the surrounding window state, when one exists.
    pub window_span: Option<Interval>,
    /// When false, class labels in quantifiers match exactly instead of by
    /// subclass expansion.
    pub enrichment: bool,
}

/// An object variable binding: the node realizing the object in each scope
/// frame (absent frames hold `None`).
#[derive(Debug, Clone)]
pub struct BoundObject<'a> {
    pub track: Option<TrackId>,
    pub per_frame: Vec<Option<&'a ObjectNode>>,
}

impl<'a> BoundObject<'a> {
    /// Binds one node in a single-frame scope.
    pub fn single(node: &'a ObjectNode) -> Self {
        BoundObject {
            track: node.track_id,
            per_frame: vec![Some(node)],
        }
    }
}

pub type Bindings<'a> = BTreeMap<String, BoundObject<'a>>;

/// Evaluates an expression under the given variable bindings.
pub fn eval_bool_expr(
    expr: &BoolExpr,
    ctx: &EvalContext,
    bindings: &Bindings,
) -> Result<bool, EvalError> {
    match expr {
        BoolExpr::Const(v) => Ok(*v),
        BoolExpr::Leaf(l) => eval_leaf(l, ctx, bindings),
        BoolExpr::Not(e) => Ok(!eval_bool_expr(e, ctx, bindings)?),
        BoolExpr::And(a, b) => {
            let (x, y) = eval_pair(a, b, ctx, bindings)?;
            Ok(x && y)
        }
        BoolExpr::Or(a, b) => {
            let (x, y) = eval_pair(a, b, ctx, bindings)?;
            Ok(x || y)
        }
        BoolExpr::Nor(a, b) => {
            let (x, y) = eval_pair(a, b, ctx, bindings)?;
            Ok(!(x || y))
        }
        BoolExpr::Xor(a, b) => {
            let (x, y) = eval_pair(a, b, ctx, bindings)?;
            Ok(x ^ y)
        }
        BoolExpr::Xnor(a, b) => {
            let (x, y) = eval_pair(a, b, ctx, bindings)?;
            Ok(!(x ^ y))
        }
        BoolExpr::Implies(a, b) => {
            let (x, y) = eval_pair(a, b, ctx, bindings)?;
            Ok(!x || y)
        }
        BoolExpr::Iff(a, b) => {
            let (x, y) = eval_pair(a, b, ctx, bindings)?;
            Ok(x == y)
        }
        BoolExpr::Any { var, class, body } => {
            for cand in candidates(ctx, class)? {
                let mut inner = bindings.clone();
                inner.insert(var.clone(), cand);
                if eval_bool_expr(body, ctx, &inner)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        BoolExpr::Every { var, class, body } => {
            for cand in candidates(ctx, class)? {
                let mut inner = bindings.clone();
                inner.insert(var.clone(), cand);
                if !eval_bool_expr(body, ctx, &inner)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn eval_pair(
    a: &BoolExpr,
    b: &BoolExpr,
    ctx: &EvalContext,
    bindings: &Bindings,
) -> Result<(bool, bool), EvalError> {
    Ok((eval_bool_expr(a, ctx, bindings)?, eval_bool_expr(b, ctx, bindings)?))
}

fn frame_index(ctx: &EvalContext, at: TimeRef) -> Result<usize, EvalError> {
    if ctx.frames.is_empty() {
        return Err(EvalError::TypeMismatch("empty frame scope".into()));
    }
    match at {
        TimeRef::First => Ok(0),
        TimeRef::Second => {
            if ctx.frames.len() < 2 {
                Err(EvalError::TypeMismatch(
                    "leaf reads the second frame but the scope has one frame".into(),
                ))
            } else {
                Ok(1)
            }
        }
        TimeRef::Last => Ok(ctx.frames.len() - 1),
    }
}

fn resolve_geometry(
    g: &GeomRef,
    at_idx: usize,
    bindings: &Bindings,
) -> Result<Option<Geometry>, EvalError> {
    match g {
        GeomRef::Lit(geom) => Ok(Some(*geom)),
        GeomRef::Var(name) => {
            let bound = bindings
                .get(name)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone()))?;
            let slot = bound.per_frame.get(at_idx).ok_or_else(|| {
                EvalError::TypeMismatch(format!(
                    "binding for {name:?} does not cover frame index {at_idx}"
                ))
            })?;
            Ok(slot.map(|node| Geometry::Rect(node.geometry)))
        }
    }
}

fn resolve_interval(
    iv: &IntervalRef,
    ctx: &EvalContext,
    bindings: &Bindings,
) -> Result<Interval, EvalError> {
    match iv {
        IntervalRef::Literal(i) => Ok(*i),
        IntervalRef::WindowSpan => ctx.window_span.ok_or_else(|| {
            EvalError::TypeMismatch("no window span available in this scope".into())
        }),
        IntervalRef::TrackSpan(name) => {
            let bound = bindings
                .get(name)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone()))?;
            let mut present = bound
                .per_frame
                .iter()
                .zip(&ctx.frames)
                .filter(|(slot, _)| slot.is_some())
                .map(|(_, frame)| frame.timestamp_ms);
            let first = present.next().ok_or_else(|| {
                EvalError::TypeMismatch(format!("{name:?} never appears in scope"))
            })?;
            let last = present.last().unwrap_or(first);
            Interval::new(first, last).map_err(|_| {
                EvalError::TypeMismatch(format!(
                    "{name:?} spans a single timestamp; a proper interval needs two"
                ))
            })
        }
    }
}

fn eval_leaf(leaf: &Leaf, ctx: &EvalContext, bindings: &Bindings) -> Result<bool, EvalError> {
    match leaf {
        Leaf::Spatial { predicate, a, b, at } => {
            let idx = frame_index(ctx, *at)?;
            let (ga, gb) = match (
                resolve_geometry(a, idx, bindings)?,
                resolve_geometry(b, idx, bindings)?,
            ) {
                (Some(ga), Some(gb)) => (ga, gb),
                _ => return Ok(false),
            };
            bsf(predicate, &ga, &gb)
                .map_err(|e| EvalError::TypeMismatch(format!("spatial predicate: {e}")))
        }
        Leaf::Metric { metric, a, b, at, cmp, value } => {
            let idx = frame_index(ctx, *at)?;
            let (ga, gb) = match (
                resolve_geometry(a, idx, bindings)?,
                resolve_geometry(b, idx, bindings)?,
            ) {
                (Some(ga), Some(gb)) => (ga, gb),
                _ => return Ok(false),
            };
            let measured = msf(*metric, &ga, &gb)
                .map_err(|e| EvalError::TypeMismatch(format!("metric function: {e}")))?;
            Ok(cmp.apply(measured, *value))
        }
        Leaf::Allen { relation, a, b } => {
            let ia = resolve_interval(a, ctx, bindings)?;
            let ib = resolve_interval(b, ctx, bindings)?;
            Ok(allen(&ia, &ib) == *relation)
        }
    }
}

/// Candidate bindings for a quantifier: in a single-frame scope, every node
/// of the class in that frame (tracked or not); in a multi-frame scope, the
/// tracked objects of the class present in every frame of the scope, so all
/// leaves are total over the binding.
fn candidates<'a>(
    ctx: &EvalContext<'a>,
    class: &str,
) -> Result<Vec<BoundObject<'a>>, EvalError> {
    let class_matches = |node: &ObjectNode| -> Result<bool, EvalError> {
        if ctx.enrichment {
            ctx.schema.is_subclass(&node.class, class).map_err(|e| {
                EvalError::TypeMismatch(format!("quantifier class lookup: {e}"))
            })
        } else {
            if ctx.schema.class(class).is_none() {
                return Err(EvalError::TypeMismatch(format!(
                    "quantifier class lookup: unknown class {class:?}"
                )));
            }
            Ok(node.class == class)
        }
    };

    if ctx.frames.len() == 1 {
        let mut out = Vec::new();
        for node in &ctx.frames[0].nodes {
            if class_matches(node)? {
                out.push(BoundObject::single(node));
            }
        }
        return Ok(out);
    }

    let mut per_track: BTreeMap<TrackId, Vec<Option<&ObjectNode>>> = BTreeMap::new();
    for (i, frame) in ctx.frames.iter().enumerate() {
        for node in &frame.nodes {
            if let Some(track) = node.track_id {
                if class_matches(node)? {
                    per_track
                        .entry(track)
                        .or_insert_with(|| vec![None; ctx.frames.len()])[i] = Some(node);
                }
            }
        }
    }
    Ok(per_track
        .into_iter()
        .filter(|(_, per_frame)| per_frame.iter().all(Option::is_some))
        .map(|(track, per_frame)| BoundObject {
            track: Some(track),
            per_frame,
        })
        .collect())
}
