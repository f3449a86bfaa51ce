//! Geometric primitives in image coordinates: x grows rightward, y grows
//! downward, units are pixels. Rectangles are axis-aligned and stored as
//! top-left corner plus extent, which matches the `[x, y, w, h]` layout used
//! by detector output.

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

use super::SpatialError;

/// A point in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// A line segment between two distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub a: Point,
    pub b: Point,
}

impl LineSegment {
    /// Builds a segment; the endpoints must differ.
    pub fn new(a: Point, b: Point) -> Result<Self, SpatialError> {
        if a == b {
            return Err(SpatialError::DegenerateGeometry);
        }
        Ok(LineSegment { a, b })
    }

    /// Point at parameter `t` (0 = `a`, 1 = `b`).
    pub fn at(&self, t: f64) -> Point {
        Point::new(
            self.a.x + t * (self.b.x - self.a.x),
            self.a.y + t * (self.b.y - self.a.y),
        )
    }

    pub fn midpoint(&self) -> Point {
        self.at(0.5)
    }
}

/// An axis-aligned rectangle: top-left corner plus non-negative extent.
///
/// Serializes as the 4-element array `[x, y, w, h]` everywhere (wire frames,
/// ground truth, notification payloads).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Rect { x, y, w, h }
    }

    /// Right edge coordinate.
    pub fn x1(&self) -> f64 {
        self.x + self.w
    }

    /// Bottom edge coordinate.
    pub fn y1(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Extents are non-negative (zero-extent rects are tolerated in wire
    /// data but rejected by the predicates that need area).
    pub fn is_valid(&self) -> bool {
        self.w >= 0.0 && self.h >= 0.0 && self.x.is_finite() && self.y.is_finite()
    }

    pub fn has_area(&self) -> bool {
        self.w > 0.0 && self.h > 0.0
    }

    /// Centre of mass. Errors on zero-extent rectangles so callers never
    /// build directions or distances out of degenerate boxes.
    pub fn centroid(&self) -> Result<Point, SpatialError> {
        if !self.has_area() {
            return Err(SpatialError::DegenerateGeometry);
        }
        Ok(Point::new(self.x + self.w / 2.0, self.y + self.h / 2.0))
    }

    /// True when `p` lies strictly inside.
    pub fn contains_open(&self, p: &Point) -> bool {
        p.x > self.x && p.x < self.x1() && p.y > self.y && p.y < self.y1()
    }

    /// True when `p` lies inside or on the boundary.
    pub fn contains_closed(&self, p: &Point) -> bool {
        p.x >= self.x && p.x <= self.x1() && p.y >= self.y && p.y <= self.y1()
    }

    /// True when `p` lies exactly on the boundary.
    pub fn on_boundary(&self, p: &Point) -> bool {
        self.contains_closed(p) && !self.contains_open(p)
    }

    /// True when `self` is fully contained in `other` (closed sense).
    pub fn within_closed(&self, other: &Rect) -> bool {
        self.x >= other.x
            && self.y >= other.y
            && self.x1() <= other.x1()
            && self.y1() <= other.y1()
    }
}

impl Serialize for Rect {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(4)?;
        tup.serialize_element(&self.x)?;
        tup.serialize_element(&self.y)?;
        tup.serialize_element(&self.w)?;
        tup.serialize_element(&self.h)?;
        tup.end()
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RectVisitor;

        impl<'de> Visitor<'de> for RectVisitor {
            type Value = Rect;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a 4-element array [x, y, w, h]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Rect, A::Error> {
                let x = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let y = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let w = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(2, &self))?;
                let h = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(3, &self))?;
                if seq.next_element::<f64>()?.is_some() {
                    return Err(de::Error::invalid_length(5, &self));
                }
                Ok(Rect::new(x, y, w, h))
            }
        }

        deserializer.deserialize_tuple(4, RectVisitor)
    }
}

/// Any geometry the spatial calculus accepts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Point(Point),
    Segment(LineSegment),
    Rect(Rect),
}

impl Geometry {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "point",
            Geometry::Segment(_) => "segment",
            Geometry::Rect(_) => "rect",
        }
    }

    /// Representative point: the point itself, a segment's midpoint, or the
    /// rectangle centroid (errors on zero-extent rectangles).
    pub fn reference_point(&self) -> Result<Point, SpatialError> {
        match self {
            Geometry::Point(p) => Ok(*p),
            Geometry::Segment(s) => Ok(s.midpoint()),
            Geometry::Rect(r) => r.centroid(),
        }
    }
}

impl From<Rect> for Geometry {
    fn from(r: Rect) -> Self {
        Geometry::Rect(r)
    }
}

impl From<Point> for Geometry {
    fn from(p: Point) -> Self {
        Geometry::Point(p)
    }
}

impl From<LineSegment> for Geometry {
    fn from(s: LineSegment) -> Self {
        Geometry::Segment(s)
    }
}

/// Area of the intersection of two rectangles; zero when they are disjoint
/// or touch only along edges or corners.
pub fn intersection_area(a: &Rect, b: &Rect) -> f64 {
    let ix = (a.x1().min(b.x1()) - a.x.max(b.x)).max(0.0);
    let iy = (a.y1().min(b.y1()) - a.y.max(b.y)).max(0.0);
    ix * iy
}

/// Intersection-over-union for two rectangles. Zero-area operands yield 0.
pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_of_unit_square() {
        let r = Rect::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(r.centroid().unwrap(), Point::new(5.0, 5.0));
    }

    #[test]
    fn centroid_rejects_zero_extent() {
        let r = Rect::new(3.0, 4.0, 0.0, 10.0);
        assert_eq!(r.centroid(), Err(SpatialError::DegenerateGeometry));
    }

    #[test]
    fn segment_rejects_coincident_endpoints() {
        let p = Point::new(1.0, 1.0);
        assert_eq!(LineSegment::new(p, p), Err(SpatialError::DegenerateGeometry));
    }

    #[test]
    fn intersection_area_of_overlapping_rects() {
        let a = Rect::new(0.0, 0.0, 10.0, 10.0);
        let b = Rect::new(5.0, 5.0, 10.0, 10.0);
        assert_eq!(intersection_area(&a, &b), 25.0);
        assert_eq!(intersection_area(&b, &a), 25.0);
    }

    #[test]
    fn intersection_area_zero_for_disjoint_and_touching() {
        let a = Rect::new(0.0, 0.0, 4.0, 4.0);
        let b = Rect::new(9.0, 0.0, 4.0, 4.0);
        assert_eq!(intersection_area(&a, &b), 0.0);
        // Shared edge: closed sets intersect but the common area is zero.
        let c = Rect::new(4.0, 0.0, 4.0, 4.0);
        assert_eq!(intersection_area(&a, &c), 0.0);
    }

    #[test]
    fn rect_round_trips_as_four_array() {
        let r = Rect::new(1.5, 2.0, 3.0, 4.5);
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(js, "[1.5,2.0,3.0,4.5]");
        let back: Rect = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rect_deserialize_rejects_wrong_arity() {
        assert!(serde_json::from_str::<Rect>("[1,2,3]").is_err());
        assert!(serde_json::from_str::<Rect>("[1,2,3,4,5]").is_err());
    }

    #[test]
    fn iou_of_identical_rects_is_one() {
        let a = Rect::new(2.0, 2.0, 6.0, 6.0);
        assert_eq!(iou(&a, &a), 1.0);
    }
}
