//! Shared test-side oracles, written independently of the library code they
//! check.
//!
//! The topology oracle rasterizes instead of reasoning about coordinates:
//! geometries with integer coordinates are sampled on the half-step lattice
//! (coordinates doubled so every sample is an integer pair), each sample is
//! classified against both operands, and the dimension of each of the nine
//! part intersections is recovered from sample parity. For integer
//! rectangles every cell of the two-rect arrangement is bounded by integer
//! lines, so a cell of dimension d always contains a sample with exactly d
//! odd doubled coordinates, and a sample with an odd coordinate can never
//! sit on a boundary. That makes the parity rule exact, not approximate:
//!
//!   any (odd, odd) sample in a class        -> dimension 2
//!   else any sample with one odd coordinate -> dimension 1
//!   else any sample                         -> dimension 0
//!   no samples                              -> F
//!
//! Segments are handled by an exact one-dimensional sweep in the segment
//! parameter t: with integer endpoints, every boundary crossing happens at a
//! rational t whose denominator divides |dx|·|dy|, so sampling t at half
//! that granularity hits every isolated crossing on an even step and every
//! one-dimensional piece on an odd step. All arithmetic is integer.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scenecep::spatial::{De9imMatrix, Dim, LineSegment, Part, Rect, TopologicalRelation};
use scenecep::temporal::{AllenRelation, Interval};

/// Classification of one lattice sample against one geometry.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Interior,
    Boundary,
    Exterior,
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Interior => 0,
        Side::Boundary => 1,
        Side::Exterior => 2,
    }
}

/// Classifies a doubled-lattice sample against a rect with doubled integer
/// edges.
fn classify_rect2(px2: i64, py2: i64, r2: &(i64, i64, i64, i64)) -> Side {
    let (x0, y0, x1, y1) = *r2;
    if px2 > x0 && px2 < x1 && py2 > y0 && py2 < y1 {
        Side::Interior
    } else if px2 >= x0 && px2 <= x1 && py2 >= y0 && py2 <= y1 {
        Side::Boundary
    } else {
        Side::Exterior
    }
}

/// Doubled integer edges of a rect whose coordinates are integers.
fn doubled_edges(r: &Rect) -> (i64, i64, i64, i64) {
    let conv = |v: f64| -> i64 {
        let i = v.round() as i64;
        assert!(
            (v - i as f64).abs() == 0.0,
            "oracle requires integer coordinates, got {v}"
        );
        2 * i
    };
    (conv(r.x), conv(r.y), conv(r.x1()), conv(r.y1()))
}

/// Dimension increment for a sample with the given doubled coordinates.
fn parity_dim(px2: i64, py2: i64) -> Dim {
    match (px2.rem_euclid(2), py2.rem_euclid(2)) {
        (1, 1) => Dim::D2,
        (0, 0) => Dim::D0,
        _ => Dim::D1,
    }
}

/// Rasterized DE-9im matrix for two integer-coordinate rectangles.
pub fn oracle_rect_rect(a: &Rect, b: &Rect) -> [[Dim; 3]; 3] {
    let a2 = doubled_edges(a);
    let b2 = doubled_edges(b);
    // One unit of margin so exterior∩exterior regions (and every
    // boundary-against-exterior strip) are sampled.
    let lo_x = a2.0.min(b2.0) - 2;
    let hi_x = a2.2.max(b2.2) + 2;
    let lo_y = a2.1.min(b2.1) - 2;
    let hi_y = a2.3.max(b2.3) + 2;
    let mut cells = [[Dim::Empty; 3]; 3];
    for px2 in lo_x..=hi_x {
        for py2 in lo_y..=hi_y {
            let sa = classify_rect2(px2, py2, &a2);
            let sb = classify_rect2(px2, py2, &b2);
            let d = parity_dim(px2, py2);
            let cell = &mut cells[side_index(sa)][side_index(sb)];
            *cell = (*cell).max(d);
        }
    }
    cells
}

/// Rasterized DE-9im matrix for an integer point against an integer rect.
///
/// A point's interior is the point itself and its boundary is empty, so a
/// sample classifies as the point's interior exactly when it coincides
/// with it.
pub fn oracle_point_rect(px: i64, py: i64, r: &Rect) -> [[Dim; 3]; 3] {
    let r2 = doubled_edges(r);
    let (qx2, qy2) = (2 * px, 2 * py);
    let lo_x = r2.0.min(qx2) - 2;
    let hi_x = r2.2.max(qx2) + 2;
    let lo_y = r2.1.min(qy2) - 2;
    let hi_y = r2.3.max(qy2) + 2;
    let mut cells = [[Dim::Empty; 3]; 3];
    for sx2 in lo_x..=hi_x {
        for sy2 in lo_y..=hi_y {
            let sp = if sx2 == qx2 && sy2 == qy2 {
                Side::Interior
            } else {
                Side::Exterior
            };
            let sr = classify_rect2(sx2, sy2, &r2);
            let d = parity_dim(sx2, sy2);
            let cell = &mut cells[side_index(sp)][side_index(sr)];
            *cell = (*cell).max(d);
        }
    }
    cells
}

/// Exact parameter-sweep DE-9im matrix for an integer-endpoint segment
/// against an integer rect.
///
/// The segment rows come from the sweep; the exterior row follows from
/// dimension alone: removing a segment from the rect interior leaves area,
/// a straight segment can cover at most one of the four boundary edges,
/// and the common exterior is unbounded.
pub fn oracle_segment_rect(s: &LineSegment, r: &Rect) -> [[Dim; 3]; 3] {
    let as_int = |v: f64| -> i64 {
        let i = v.round() as i64;
        assert!(
            (v - i as f64).abs() == 0.0,
            "oracle requires integer coordinates, got {v}"
        );
        i
    };
    let (ax, ay) = (as_int(s.a.x), as_int(s.a.y));
    let (bx, by) = (as_int(s.b.x), as_int(s.b.y));
    let (dx, dy) = (bx - ax, by - ay);
    // Common denominator of every boundary-crossing parameter.
    let denom = dx.abs().max(1) * dy.abs().max(1);
    let n = 2 * denom; // t = k / n for k in 0..=n
    let rx0 = as_int(r.x) * n;
    let ry0 = as_int(r.y) * n;
    let rx1 = as_int(r.x1()) * n;
    let ry1 = as_int(r.y1()) * n;

    let mut cells = [[Dim::Empty; 3]; 3];
    for k in 0..=n {
        // Segment point at t = k/n, scaled by n so it stays integer.
        let px = ax * n + k * dx;
        let py = ay * n + k * dy;
        let sr = if px > rx0 && px < rx1 && py > ry0 && py < ry1 {
            Side::Interior
        } else if px >= rx0 && px <= rx1 && py >= ry0 && py <= ry1 {
            Side::Boundary
        } else {
            Side::Exterior
        };
        let ss = if k == 0 || k == n {
            Side::Boundary
        } else {
            Side::Interior
        };
        let d = if k % 2 == 1 { Dim::D1 } else { Dim::D0 };
        let cell = &mut cells[side_index(ss)][side_index(sr)];
        *cell = (*cell).max(d);
    }
    cells[2][0] = Dim::D2;
    cells[2][1] = Dim::D1;
    cells[2][2] = Dim::D2;
    cells
}

/// Nine-character pattern of an oracle matrix, in the same row-major layout
/// the library prints.
pub fn oracle_pattern(cells: &[[Dim; 3]; 3]) -> String {
    cells
        .iter()
        .flat_map(|row| {
            row.iter().map(|d| match d {
                Dim::Empty => 'F',
                Dim::D0 => '0',
                Dim::D1 => '1',
                Dim::D2 => '2',
            })
        })
        .collect()
}

/// The library matrix flattened into the oracle cell layout.
pub fn cells_of(m: &De9imMatrix) -> [[Dim; 3]; 3] {
    let parts = [Part::Interior, Part::Boundary, Part::Exterior];
    let mut cells = [[Dim::Empty; 3]; 3];
    for (i, &row) in parts.iter().enumerate() {
        for (j, &col) in parts.iter().enumerate() {
            cells[i][j] = m.get(row, col);
        }
    }
    cells
}

/// Evaluates a named topological predicate on an oracle matrix. Returns
/// `None` for the one predicate that is undefined on area×area operands.
pub fn oracle_holds(rel: TopologicalRelation, cells: &[[Dim; 3]; 3]) -> Option<bool> {
    let f = Dim::Empty;
    let (ii, ib, ie) = (cells[0][0], cells[0][1], cells[0][2]);
    let (bi, bb, be) = (cells[1][0], cells[1][1], cells[1][2]);
    let (ei, eb) = (cells[2][0], cells[2][1]);
    let contact = ii != f || ib != f || bi != f || bb != f;
    Some(match rel {
        TopologicalRelation::Disjoint => !contact,
        TopologicalRelation::Intersect => contact,
        TopologicalRelation::Touch => ii == f && (ib != f || bi != f || bb != f),
        TopologicalRelation::Within => ii != f && ie == f && be == f,
        TopologicalRelation::Contains => ii != f && ei == f && eb == f,
        TopologicalRelation::CoveredBy => contact && ie == f && be == f,
        TopologicalRelation::Inside => {
            ii != f && ib == f && ie == f && bb == f && be == f
        }
        TopologicalRelation::Overlap => ii == Dim::D2 && ie != f && ei != f,
        TopologicalRelation::Crosses => return None,
    })
}

/// The eight jointly-exhaustive, pairwise-disjoint base classes of the
/// region-connection calculus, as they specialize to axis-aligned
/// rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rcc8 {
    /// Disconnected: no closure contact.
    Dc,
    /// Externally connected: boundaries touch, interiors do not.
    Ec,
    /// Partial overlap.
    Po,
    /// Equal.
    Eq,
    /// Tangential proper part (first inside second, boundaries touch).
    Tpp,
    /// Non-tangential proper part (first strictly inside second).
    Ntpp,
    /// Inverse tangential proper part.
    Tppi,
    /// Inverse non-tangential proper part.
    Ntppi,
}

pub const RCC8_ALL: [Rcc8; 8] = [
    Rcc8::Dc,
    Rcc8::Ec,
    Rcc8::Po,
    Rcc8::Eq,
    Rcc8::Tpp,
    Rcc8::Ntpp,
    Rcc8::Tppi,
    Rcc8::Ntppi,
];

/// Every base class whose matrix definition holds; a correct matrix yields
/// exactly one.
pub fn rcc8_classes(cells: &[[Dim; 3]; 3]) -> Vec<Rcc8> {
    let f = Dim::Empty;
    let (ii, ib, ie) = (cells[0][0], cells[0][1], cells[0][2]);
    let (bi, bb, be) = (cells[1][0], cells[1][1], cells[1][2]);
    let (ei, eb) = (cells[2][0], cells[2][1]);
    let contact = ii != f || ib != f || bi != f || bb != f;
    let within = ii != f && ie == f && be == f;
    let contains = ii != f && ei == f && eb == f;
    let eq = within && contains;
    let inside = ii != f && ib == f && ie == f && bb == f && be == f;
    let inside_inv = ii != f && bi == f && ei == f && bb == f && eb == f;
    let mut out = Vec::new();
    if !contact {
        out.push(Rcc8::Dc);
    }
    if ii == f && contact {
        out.push(Rcc8::Ec);
    }
    if ii == Dim::D2 && ie != f && ei != f {
        out.push(Rcc8::Po);
    }
    if eq {
        out.push(Rcc8::Eq);
    }
    if within && !inside && !eq {
        out.push(Rcc8::Tpp);
    }
    if inside {
        out.push(Rcc8::Ntpp);
    }
    if contains && !inside_inv && !eq {
        out.push(Rcc8::Tppi);
    }
    if inside_inv {
        out.push(Rcc8::Ntppi);
    }
    out
}

/// Every interval relation whose raw endpoint comparisons hold — an
/// independent restatement of the thirteen definitions. For proper
/// intervals exactly one entry should come back.
pub fn allen_by_endpoints(i1: &Interval, i2: &Interval) -> Vec<AllenRelation> {
    let (s1, e1) = (i1.start(), i1.end());
    let (s2, e2) = (i2.start(), i2.end());
    let holds = |rel: AllenRelation| match rel {
        AllenRelation::Before => e1 < s2,
        AllenRelation::After => e2 < s1,
        AllenRelation::Meets => e1 == s2,
        AllenRelation::MetBy => e2 == s1,
        AllenRelation::Overlaps => s1 < s2 && s2 < e1 && e1 < e2,
        AllenRelation::OverlappedBy => s2 < s1 && s1 < e2 && e2 < e1,
        AllenRelation::Starts => s1 == s2 && e1 < e2,
        AllenRelation::StartedBy => s1 == s2 && e2 < e1,
        AllenRelation::Finishes => e1 == e2 && s2 < s1,
        AllenRelation::FinishedBy => e1 == e2 && s1 < s2,
        AllenRelation::During => s2 < s1 && e1 < e2,
        AllenRelation::Contains => s1 < s2 && e2 < e1,
        AllenRelation::Equals => s1 == s2 && e1 == e2,
    };
    AllenRelation::ALL.into_iter().filter(|&r| holds(r)).collect()
}

/// A random integer-coordinate rectangle with both corners inside
/// `[0, max]²` and positive extent.
pub fn random_int_rect(rng: &mut ChaCha8Rng, max: i64) -> Rect {
    let x = rng.random_range(0..max);
    let y = rng.random_range(0..max);
    let w = rng.random_range(1..=max - x);
    let h = rng.random_range(1..=max - y);
    Rect::new(x as f64, y as f64, w as f64, h as f64)
}

/// Independent per-frame detection F1: exhaustive maximum matching (the
/// library uses augmenting paths; this recursion tries every assignment).
/// An edge requires equal class and IoU ≥ 0.5, with IoU computed from
/// scratch here.
pub fn oracle_frame_f1(predicted: &[(String, Rect)], truth: &[(String, Rect)]) -> f64 {
    fn iou_raw(a: &Rect, b: &Rect) -> f64 {
        let ix = (a.x1().min(b.x1()) - a.x.max(b.x)).max(0.0);
        let iy = (a.y1().min(b.y1()) - a.y.max(b.y)).max(0.0);
        let inter = ix * iy;
        let union = a.w * a.h + b.w * b.h - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
    fn best(
        p: usize,
        predicted: &[(String, Rect)],
        truth: &[(String, Rect)],
        used: &mut Vec<bool>,
    ) -> usize {
        if p == predicted.len() {
            return 0;
        }
        // Leaving this prediction unmatched is always an option.
        let mut top = best(p + 1, predicted, truth, used);
        for t in 0..truth.len() {
            if used[t]
                || predicted[p].0 != truth[t].0
                || iou_raw(&predicted[p].1, &truth[t].1) < 0.5
            {
                continue;
            }
            used[t] = true;
            top = top.max(1 + best(p + 1, predicted, truth, used));
            used[t] = false;
        }
        top
    }
    let mut used = vec![false; truth.len()];
    let tp = best(0, predicted, truth, &mut used);
    let denom = predicted.len() + truth.len();
    if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}
