//! Directional relations over a fixed orientation reference system, plus the
//! boolean (`bsf`) and metric (`msf`) spatial functions that rule bodies and
//! pattern evaluators are built from.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::de9im::{holds_topology, TopologicalRelation};
use super::geometry::{intersection_area, Geometry, Point};
use super::SpatialError;

/// The unit vector designating "front". Default is +x (rightward in image
/// coordinates); the perpendicular used for left/right is the +90° rotation
/// in image coordinates (y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    fx: f64,
    fy: f64,
}

impl Axis {
    /// Builds a front axis from any non-zero vector; it is normalised so
    /// projections are comparable across axes.
    pub fn new(fx: f64, fy: f64) -> Result<Self, SpatialError> {
        let n = (fx * fx + fy * fy).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(SpatialError::DegenerateGeometry);
        }
        Ok(Axis {
            fx: fx / n,
            fy: fy / n,
        })
    }

    /// The +x axis: "front" is rightward.
    pub const POS_X: Axis = Axis { fx: 1.0, fy: 0.0 };

    pub fn front(&self) -> (f64, f64) {
        (self.fx, self.fy)
    }

    /// Perpendicular obtained by rotating the front vector +90° in image
    /// coordinates.
    pub fn perp(&self) -> (f64, f64) {
        (-self.fy, self.fx)
    }
}

impl Default for Axis {
    fn default() -> Self {
        Axis::POS_X
    }
}

/// The four directional relations of the orientation reference system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Front,
    Back,
    Left,
    Right,
}

impl Direction {
    pub fn name(&self) -> &'static str {
        match self {
            Direction::Front => "front",
            Direction::Back => "back",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    /// The direction seen from the opposite operand order.
    pub fn inverse(&self) -> Direction {
        match self {
            Direction::Front => Direction::Back,
            Direction::Back => Direction::Front,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies where A lies relative to B: the displacement of A's centroid
/// from B's is projected on the front axis and its perpendicular, and the
/// dominant component wins (ties go to the front/back pair). Returns `None`
/// when the centroids coincide — no direction is defined there.
///
/// Both geometries must be positive-area rectangles; directions between
/// lower-dimensional geometries are not part of the calculus.
pub fn direction(
    a: &Geometry,
    b: &Geometry,
    axis: Axis,
) -> Result<Option<Direction>, SpatialError> {
    let ca = area_centroid(a)?;
    let cb = area_centroid(b)?;
    let (dx, dy) = (ca.x - cb.x, ca.y - cb.y);
    if dx == 0.0 && dy == 0.0 {
        return Ok(None);
    }
    let (fx, fy) = axis.front();
    let (px, py) = axis.perp();
    let along = dx * fx + dy * fy;
    let across = dx * px + dy * py;
    Ok(Some(if along.abs() >= across.abs() {
        if along > 0.0 {
            Direction::Front
        } else {
            Direction::Back
        }
    } else if across < 0.0 {
        Direction::Left
    } else {
        Direction::Right
    }))
}

fn area_centroid(g: &Geometry) -> Result<Point, SpatialError> {
    match g {
        Geometry::Rect(r) => r.centroid(),
        _ => Err(SpatialError::DegenerateGeometry),
    }
}

/// A named spatial relation a boolean spatial function can test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpatialPredicate {
    /// One of the nine DE-9im predicates.
    Topological(TopologicalRelation),
    /// Full orientation classification equals the given direction.
    Fors(Direction, Axis),
    /// Pure projection test: (c_A − c_B) · front < 0. This deliberately
    /// ignores the lateral component so a lane offset cannot mask a pass.
    BackAlong(Axis),
    /// Pure projection test: (c_A − c_B) · front > 0.
    FrontAlong(Axis),
}

/// Boolean spatial function: true iff the relation holds between the two
/// geometries. An undefined direction (coincident centroids) is false, and
/// a projection landing exactly on zero is false for both of the pure
/// projection tests — a strict crossing is required before either fires.
pub fn bsf(pred: &SpatialPredicate, a: &Geometry, b: &Geometry) -> Result<bool, SpatialError> {
    match pred {
        SpatialPredicate::Topological(rel) => holds_topology(*rel, a, b),
        SpatialPredicate::Fors(dir, axis) => {
            Ok(direction(a, b, *axis)? == Some(*dir))
        }
        SpatialPredicate::BackAlong(axis) => Ok(projection_along(a, b, *axis)? < 0.0),
        SpatialPredicate::FrontAlong(axis) => Ok(projection_along(a, b, *axis)? > 0.0),
    }
}

fn projection_along(a: &Geometry, b: &Geometry, axis: Axis) -> Result<f64, SpatialError> {
    let ca = area_centroid(a)?;
    let cb = area_centroid(b)?;
    let (fx, fy) = axis.front();
    Ok((ca.x - cb.x) * fx + (ca.y - cb.y) * fy)
}

/// The metric spatial functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MetricKind {
    /// Euclidean distance between the representative points.
    Distance,
    /// Area of the rectangle intersection.
    OverlapArea,
    /// Intersection area divided by the area of the first operand, so the
    /// first operand is the reference (e.g. the slot in an occupancy test).
    OverlapRatio,
}

/// Metric spatial function: a real-valued measurement between two
/// geometries. `OverlapArea` and `OverlapRatio` are defined for rectangle
/// pairs only; `OverlapRatio` additionally needs a positive-area reference.
pub fn msf(metric: MetricKind, a: &Geometry, b: &Geometry) -> Result<f64, SpatialError> {
    match metric {
        MetricKind::Distance => {
            let ca = a.reference_point()?;
            let cb = b.reference_point()?;
            Ok(ca.distance(&cb))
        }
        MetricKind::OverlapArea | MetricKind::OverlapRatio => {
            let (ra, rb) = match (a, b) {
                (Geometry::Rect(ra), Geometry::Rect(rb)) => (ra, rb),
                _ => {
                    return Err(SpatialError::UnsupportedGeometryPair(
                        a.kind_name(),
                        b.kind_name(),
                    ))
                }
            };
            let inter = intersection_area(ra, rb);
            if metric == MetricKind::OverlapArea {
                Ok(inter)
            } else if ra.has_area() {
                Ok(inter / ra.area())
            } else {
                Err(SpatialError::DegenerateGeometry)
            }
        }
    }
}
