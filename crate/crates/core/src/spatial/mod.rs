//! The spatial half of the event calculus: exact axis-aligned geometry,
//! DE-9im topological predicates, directional relations over a configurable
//! front axis, and the boolean/metric spatial functions.
//!
//! Everything here is a pure function over immutable values; the module is
//! safe for unrestricted concurrent use.

mod de9im;
mod functions;
mod geometry;

use thiserror::Error;

pub use de9im::{de9im, holds_topology, De9imMatrix, Dim, Part, TopologicalRelation};
pub use functions::{bsf, direction, msf, Axis, Direction, MetricKind, SpatialPredicate};
pub use geometry::{intersection_area, iou, Geometry, LineSegment, Point, Rect};

/// Failures of the spatial calculus.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SpatialError {
    /// A geometry without the extent an operation needs: zero-area rect
    /// where area is required, coincident segment endpoints, zero axis.
    #[error("degenerate geometry: operation requires positive extent")]
    DegenerateGeometry,
    /// The operand kinds have no matrix computation.
    #[error("unsupported geometry pair: {0} × {1}")]
    UnsupportedGeometryPair(&'static str, &'static str),
    /// The predicate has no meaning for the operand kinds.
    #[error("predicate {0} is undefined for {1} × {2}")]
    UndefinedPredicate(&'static str, &'static str, &'static str),
}
