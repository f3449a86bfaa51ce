//! The temporal half of the event calculus: proper intervals with the
//! thirteen Allen relations, and the boolean expression layer that composes
//! spatial and temporal leaves into pattern-rule bodies.
//!
//! Everything here is pure; safe for unrestricted concurrent use.

mod expr;
mod interval;

use thiserror::Error;

pub use expr::{
    eval_bool_expr, Bindings, BoolExpr, BoundObject, Cmp, EvalContext, EvalError, GeomRef,
    IntervalRef, Leaf, TimeRef,
};
pub use interval::{allen, inverse, AllenRelation, Interval, TimeSpan};

/// Failures of interval construction.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum TemporalError {
    /// Intervals must satisfy start < end.
    #[error("improper interval: start {start} must precede end {end}")]
    ImproperInterval { start: i64, end: i64 },
    /// Spans must satisfy start ≤ end.
    #[error("invalid span: start {start} is after end {end}")]
    InvalidSpan { start: i64, end: i64 },
}
