//! DE-9im intersection matrices computed analytically for axis-aligned
//! geometry, and the nine named topological predicates defined over them.
//!
//! Supported operand pairs are Rect×Rect, Point×Rect, and LineSegment×Rect
//! (plus the mirrored forms, obtained by transposition). Everything is exact
//! interval arithmetic on the coordinates — no rasterization, no epsilon.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::geometry::{Geometry, LineSegment, Point, Rect};
use super::SpatialError;

/// Dimension of a point-set intersection: empty, a point, a curve, an area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dim {
    /// Written `F` in matrix patterns.
    Empty,
    /// Dimension 0: isolated point(s).
    D0,
    /// Dimension 1: curve segment(s).
    D1,
    /// Dimension 2: region with area.
    D2,
}

impl Dim {
    fn symbol(self) -> char {
        match self {
            Dim::Empty => 'F',
            Dim::D0 => '0',
            Dim::D1 => '1',
            Dim::D2 => '2',
        }
    }
}

/// One of the three topological parts of a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Interior,
    Boundary,
    Exterior,
}

/// The 3×3 DE-9im matrix. Rows index parts of the first geometry, columns
/// parts of the second, in the order interior, boundary, exterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct De9imMatrix {
    cells: [[Dim; 3]; 3],
}

impl De9imMatrix {
    fn idx(p: Part) -> usize {
        match p {
            Part::Interior => 0,
            Part::Boundary => 1,
            Part::Exterior => 2,
        }
    }

    pub fn get(&self, row: Part, col: Part) -> Dim {
        self.cells[Self::idx(row)][Self::idx(col)]
    }

    pub fn ii(&self) -> Dim {
        self.cells[0][0]
    }
    pub fn ib(&self) -> Dim {
        self.cells[0][1]
    }
    pub fn ie(&self) -> Dim {
        self.cells[0][2]
    }
    pub fn bi(&self) -> Dim {
        self.cells[1][0]
    }
    pub fn bb(&self) -> Dim {
        self.cells[1][1]
    }
    pub fn be(&self) -> Dim {
        self.cells[1][2]
    }
    pub fn ei(&self) -> Dim {
        self.cells[2][0]
    }
    pub fn eb(&self) -> Dim {
        self.cells[2][1]
    }
    pub fn ee(&self) -> Dim {
        self.cells[2][2]
    }

    /// Matrix with the operand roles swapped.
    pub fn transpose(&self) -> De9imMatrix {
        let c = &self.cells;
        De9imMatrix {
            cells: [
                [c[0][0], c[1][0], c[2][0]],
                [c[0][1], c[1][1], c[2][1]],
                [c[0][2], c[1][2], c[2][2]],
            ],
        }
    }

    /// Nine-character row-major pattern, e.g. `FF2FF1212`.
    pub fn pattern(&self) -> String {
        self.cells
            .iter()
            .flat_map(|row| row.iter().map(|d| d.symbol()))
            .collect()
    }
}

impl fmt::Display for De9imMatrix {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(&self.pattern())
    }
}

/// The nine named topological relations of the event calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TopologicalRelation {
    Disjoint,
    Touch,
    Contains,
    Intersect,
    Within,
    CoveredBy,
    Crosses,
    Overlap,
    Inside,
}

impl TopologicalRelation {
    pub const ALL: [TopologicalRelation; 9] = [
        TopologicalRelation::Disjoint,
        TopologicalRelation::Touch,
        TopologicalRelation::Contains,
        TopologicalRelation::Intersect,
        TopologicalRelation::Within,
        TopologicalRelation::CoveredBy,
        TopologicalRelation::Crosses,
        TopologicalRelation::Overlap,
        TopologicalRelation::Inside,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TopologicalRelation::Disjoint => "Disjoint",
            TopologicalRelation::Touch => "Touch",
            TopologicalRelation::Contains => "Contains",
            TopologicalRelation::Intersect => "Intersect",
            TopologicalRelation::Within => "Within",
            TopologicalRelation::CoveredBy => "CoveredBy",
            TopologicalRelation::Crosses => "Crosses",
            TopologicalRelation::Overlap => "Overlap",
            TopologicalRelation::Inside => "Inside",
        }
    }
}

impl fmt::Display for TopologicalRelation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Computes the DE-9im matrix for a supported geometry pair.
///
/// Rectangles must have positive area; a zero-extent rect makes the
/// interior/boundary decomposition collapse and is rejected.
pub fn de9im(a: &Geometry, b: &Geometry) -> Result<De9imMatrix, SpatialError> {
    match (a, b) {
        (Geometry::Rect(ra), Geometry::Rect(rb)) => rect_rect(ra, rb),
        (Geometry::Point(p), Geometry::Rect(r)) => point_rect(p, r),
        (Geometry::Rect(r), Geometry::Point(p)) => Ok(point_rect(p, r)?.transpose()),
        (Geometry::Segment(s), Geometry::Rect(r)) => segment_rect(s, r),
        (Geometry::Rect(r), Geometry::Segment(s)) => Ok(segment_rect(s, r)?.transpose()),
        _ => Err(SpatialError::UnsupportedGeometryPair(
            a.kind_name(),
            b.kind_name(),
        )),
    }
}

/// Evaluates one named topological predicate between two geometries.
pub fn holds_topology(
    rel: TopologicalRelation,
    a: &Geometry,
    b: &Geometry,
) -> Result<bool, SpatialError> {
    use Dim::Empty as F;
    if rel == TopologicalRelation::Contains {
        // Contains(A, B) = Within(B, A).
        return holds_topology(TopologicalRelation::Within, b, a);
    }
    if rel == TopologicalRelation::Crosses {
        // Crosses is a mixed-dimension predicate: a curve passing through an
        // area. It has no meaning for the other supported pairs.
        if !matches!((a, b), (Geometry::Segment(_), Geometry::Rect(_))) {
            return Err(SpatialError::UndefinedPredicate(
                "Crosses",
                a.kind_name(),
                b.kind_name(),
            ));
        }
    }
    let m = de9im(a, b)?;
    let any_contact = m.ii() != F || m.ib() != F || m.bi() != F || m.bb() != F;
    Ok(match rel {
        TopologicalRelation::Disjoint => !any_contact,
        TopologicalRelation::Intersect => any_contact,
        TopologicalRelation::Touch => {
            m.ii() == F && (m.ib() != F || m.bi() != F || m.bb() != F)
        }
        TopologicalRelation::Within => m.ii() != F && m.ie() == F && m.be() == F,
        TopologicalRelation::CoveredBy => any_contact && m.ie() == F && m.be() == F,
        TopologicalRelation::Inside => {
            m.ii() != F && m.ib() == F && m.ie() == F && m.bb() == F && m.be() == F
        }
        TopologicalRelation::Overlap => {
            // Area-on-area overlap: interiors share a region and each side
            // keeps some exclusive interior.
            m.ii() == Dim::D2 && m.ie() != F && m.ei() != F
        }
        TopologicalRelation::Crosses => m.ii() != F && m.ie() != F,
        TopologicalRelation::Contains => unreachable!("handled above"),
    })
}

// ---------------------------------------------------------------------------
// Rect × Rect
// ---------------------------------------------------------------------------

/// An axis-aligned edge of a rectangle.
#[derive(Debug, Clone, Copy)]
enum AaEdge {
    /// Horizontal: y fixed, x spans [x0, x1].
    H { y: f64, x0: f64, x1: f64 },
    /// Vertical: x fixed, y spans [y0, y1].
    V { x: f64, y0: f64, y1: f64 },
}

fn edges_of(r: &Rect) -> [AaEdge; 4] {
    [
        AaEdge::H {
            y: r.y,
            x0: r.x,
            x1: r.x1(),
        },
        AaEdge::H {
            y: r.y1(),
            x0: r.x,
            x1: r.x1(),
        },
        AaEdge::V {
            x: r.x,
            y0: r.y,
            y1: r.y1(),
        },
        AaEdge::V {
            x: r.x1(),
            y0: r.y,
            y1: r.y1(),
        },
    ]
}

/// Does the edge meet the open box of `r`? Exact: the intersection of a
/// closed segment with an open box is either empty or a positive-length
/// piece, so the answer is a clean yes/no per edge.
fn edge_meets_open_box(e: &AaEdge, r: &Rect) -> bool {
    match *e {
        AaEdge::H { y, x0, x1 } => r.y < y && y < r.y1() && x0 < r.x1() && x1 > r.x,
        AaEdge::V { x, y0, y1 } => r.x < x && x < r.x1() && y0 < r.y1() && y1 > r.y,
    }
}

/// Dimension of the intersection of two axis-aligned edges.
fn aa_edge_intersection(a: &AaEdge, b: &AaEdge) -> Dim {
    fn span_dim(lo: f64, hi: f64) -> Dim {
        if lo > hi {
            Dim::Empty
        } else if lo == hi {
            Dim::D0
        } else {
            Dim::D1
        }
    }
    match (*a, *b) {
        (AaEdge::H { y: ya, x0: a0, x1: a1 }, AaEdge::H { y: yb, x0: b0, x1: b1 }) => {
            if ya != yb {
                Dim::Empty
            } else {
                span_dim(a0.max(b0), a1.min(b1))
            }
        }
        (AaEdge::V { x: xa, y0: a0, y1: a1 }, AaEdge::V { x: xb, y0: b0, y1: b1 }) => {
            if xa != xb {
                Dim::Empty
            } else {
                span_dim(a0.max(b0), a1.min(b1))
            }
        }
        (AaEdge::H { y, x0, x1 }, AaEdge::V { x, y0, y1 })
        | (AaEdge::V { x, y0, y1 }, AaEdge::H { y, x0, x1 }) => {
            if x0 <= x && x <= x1 && y0 <= y && y <= y1 {
                Dim::D0
            } else {
                Dim::Empty
            }
        }
    }
}

fn rect_rect(a: &Rect, b: &Rect) -> Result<De9imMatrix, SpatialError> {
    if !a.has_area() || !b.has_area() {
        return Err(SpatialError::DegenerateGeometry);
    }

    // Interiors are open boxes: they intersect iff both axis projections
    // overlap as open intervals, and then the intersection has area.
    let open_overlap =
        a.x < b.x1() && b.x < a.x1() && a.y < b.y1() && b.y < a.y1();
    let ii = if open_overlap { Dim::D2 } else { Dim::Empty };

    let a_in_b = a.within_closed(b);
    let b_in_a = b.within_closed(a);

    // Any part of A outside the closed B contains a 2-D piece of A's
    // interior and a 1-D piece of A's boundary (the violating side).
    let ie = if a_in_b { Dim::Empty } else { Dim::D2 };
    let be = if a_in_b { Dim::Empty } else { Dim::D1 };
    let ei = if b_in_a { Dim::Empty } else { Dim::D2 };
    let eb = if b_in_a { Dim::Empty } else { Dim::D1 };

    let ib = if edges_of(b).iter().any(|e| edge_meets_open_box(e, a)) {
        Dim::D1
    } else {
        Dim::Empty
    };
    let bi = if edges_of(a).iter().any(|e| edge_meets_open_box(e, b)) {
        Dim::D1
    } else {
        Dim::Empty
    };

    let mut bb = Dim::Empty;
    for ea in edges_of(a).iter() {
        for eb_ in edges_of(b).iter() {
            bb = bb.max(aa_edge_intersection(ea, eb_));
        }
    }

    Ok(De9imMatrix {
        cells: [[ii, ib, ie], [bi, bb, be], [ei, eb, Dim::D2]],
    })
}

// ---------------------------------------------------------------------------
// Point × Rect
// ---------------------------------------------------------------------------

fn point_rect(p: &Point, r: &Rect) -> Result<De9imMatrix, SpatialError> {
    if !r.has_area() {
        return Err(SpatialError::DegenerateGeometry);
    }
    let f = Dim::Empty;
    let (ii, ib, ie) = if r.contains_open(p) {
        (Dim::D0, f, f)
    } else if r.on_boundary(p) {
        (f, Dim::D0, f)
    } else {
        (f, f, Dim::D0)
    };
    // A point has an empty boundary, so the middle row is all F. Removing a
    // single point from the rect's interior or boundary never lowers their
    // dimension, so the exterior row is fixed.
    Ok(De9imMatrix {
        cells: [[ii, ib, ie], [f, f, f], [Dim::D2, Dim::D1, Dim::D2]],
    })
}

// ---------------------------------------------------------------------------
// LineSegment × Rect
// ---------------------------------------------------------------------------

/// Intersection of a parametrised segment with one axis-aligned edge,
/// reported in segment parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SegEdgeHit {
    None,
    At(f64),
    Span(f64, f64),
}

fn seg_edge_hit(s: &LineSegment, e: &AaEdge) -> SegEdgeHit {
    let dx = s.b.x - s.a.x;
    let dy = s.b.y - s.a.y;
    // Solve against the edge's fixed coordinate, then bound-check the other.
    let (d_fixed, a_fixed, fixed_lo_hi, d_free, a_free) = match *e {
        AaEdge::V { x, y0, y1 } => (dx, s.a.x - x, (y0, y1), dy, s.a.y),
        AaEdge::H { y, x0, x1 } => (dy, s.a.y - y, (x0, x1), dx, s.a.x),
    };
    if d_fixed == 0.0 {
        if a_fixed != 0.0 {
            return SegEdgeHit::None;
        }
        // Collinear with the edge's supporting line: overlap in the free
        // coordinate, mapped back to segment parameters.
        let (lo, hi) = fixed_lo_hi;
        // d_free ≠ 0 because segment endpoints differ.
        let t_at = |v: f64| (v - a_free) / d_free;
        let (mut t0, mut t1) = (t_at(lo), t_at(hi));
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let (t0, t1) = (t0.max(0.0), t1.min(1.0));
        if t0 > t1 {
            SegEdgeHit::None
        } else if t0 == t1 {
            SegEdgeHit::At(t0)
        } else {
            SegEdgeHit::Span(t0, t1)
        }
    } else {
        let t = -a_fixed / d_fixed;
        if !(0.0..=1.0).contains(&t) {
            return SegEdgeHit::None;
        }
        let free = a_free + t * d_free;
        let (lo, hi) = fixed_lo_hi;
        if free >= lo && free <= hi {
            SegEdgeHit::At(t)
        } else {
            SegEdgeHit::None
        }
    }
}

/// Liang–Barsky clip of a segment against the closed rect; returns the
/// parameter interval of the portion inside, when any.
fn clip_to_rect(s: &LineSegment, r: &Rect) -> Option<(f64, f64)> {
    let dx = s.b.x - s.a.x;
    let dy = s.b.y - s.a.y;
    let p = [-dx, dx, -dy, dy];
    let q = [s.a.x - r.x, r.x1() - s.a.x, s.a.y - r.y, r.y1() - s.a.y];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..4 {
        if p[i] == 0.0 {
            if q[i] < 0.0 {
                return None;
            }
        } else {
            let t = q[i] / p[i];
            if p[i] < 0.0 {
                if t > t1 {
                    return None;
                }
                t0 = t0.max(t);
            } else {
                if t < t0 {
                    return None;
                }
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        None
    } else {
        Some((t0, t1))
    }
}

fn segment_rect(s: &LineSegment, r: &Rect) -> Result<De9imMatrix, SpatialError> {
    if !r.has_area() {
        return Err(SpatialError::DegenerateGeometry);
    }
    if s.a == s.b {
        return Err(SpatialError::DegenerateGeometry);
    }
    let f = Dim::Empty;
    let clip = clip_to_rect(s, r);

    // Interior of the segment against interior of the rect: the clipped
    // portion must have positive length and run through the open box (a
    // positive-length clip lying along an edge line stays on the boundary).
    let ii = match clip {
        Some((t0, t1)) if t1 > t0 && r.contains_open(&s.at((t0 + t1) / 2.0)) => Dim::D1,
        _ => f,
    };

    // Interior of the segment against the rect boundary: best evidence over
    // the four edges, with hits at the segment's own endpoints excluded.
    // A Span hit is already clamped to [0, 1] with positive length, so a
    // positive-length piece always survives inside the open parameter range.
    let mut ib = f;
    for e in edges_of(r).iter() {
        match seg_edge_hit(s, e) {
            SegEdgeHit::Span(_, _) => ib = ib.max(Dim::D1),
            SegEdgeHit::At(t) => {
                if t > 0.0 && t < 1.0 {
                    ib = ib.max(Dim::D0);
                }
            }
            SegEdgeHit::None => {}
        }
    }

    // Interior of the segment against the rect exterior: any parameter range
    // outside the clip is outside the closed rect.
    let ie = match clip {
        None => Dim::D1,
        Some((t0, t1)) => {
            if t0 > 0.0 || t1 < 1.0 {
                Dim::D1
            } else {
                f
            }
        }
    };

    // Segment boundary = its two endpoints.
    let mut bi = f;
    let mut bb = f;
    let mut be = f;
    for p in [s.a, s.b] {
        if r.contains_open(&p) {
            bi = Dim::D0;
        } else if r.on_boundary(&p) {
            bb = Dim::D0;
        } else {
            be = Dim::D0;
        }
    }

    // A 1-D segment can never exhaust the rect interior, its boundary loop,
    // or the plane's exterior.
    Ok(De9imMatrix {
        cells: [[ii, ib, ie], [bi, bb, be], [Dim::D2, Dim::D1, Dim::D2]],
    })
}
