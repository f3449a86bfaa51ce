//! Proper time intervals and the thirteen Allen relations between them.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use super::TemporalError;

/// A proper interval over millisecond timestamps: `start < end`. Point
/// intervals are rejected rather than given special relation semantics —
/// window states span multiple frames, so proper intervals suffice, and it
/// avoids the relation ambiguity degenerate intervals would introduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    start: i64,
    end: i64,
}

impl Interval {
    pub fn new(start: i64, end: i64) -> Result<Self, TemporalError> {
        if start >= end {
            return Err(TemporalError::ImproperInterval { start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    pub fn duration_ms(&self) -> i64 {
        self.end - self.start
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// A closed, possibly instantaneous time span (`start ≤ end`). Window
/// states and rule matches use this — a per-frame match is a single instant
/// — while Allen tests require a proper [`Interval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl TimeSpan {
    pub fn new(start_ms: i64, end_ms: i64) -> Result<Self, TemporalError> {
        if start_ms > end_ms {
            return Err(TemporalError::InvalidSpan {
                start: start_ms,
                end: end_ms,
            });
        }
        Ok(TimeSpan { start_ms, end_ms })
    }

    /// A span covering a single instant.
    pub fn instant(t_ms: i64) -> Self {
        TimeSpan { start_ms: t_ms, end_ms: t_ms }
    }

    /// The proper interval this span covers, when it has positive length.
    pub fn to_interval(&self) -> Option<Interval> {
        Interval::new(self.start_ms, self.end_ms).ok()
    }

    /// True when `other` lies entirely within this span.
    pub fn covers(&self, other: &TimeSpan) -> bool {
        self.start_ms <= other.start_ms && other.end_ms <= self.end_ms
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "[{}, {}]", self.start_ms, self.end_ms)
    }
}

/// The thirteen Allen relations. Exactly one holds between any pair of
/// proper intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllenRelation {
    Before,
    After,
    Overlaps,
    OverlappedBy,
    Starts,
    StartedBy,
    Meets,
    MetBy,
    Finishes,
    FinishedBy,
    During,
    Contains,
    Equals,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Before,
        AllenRelation::After,
        AllenRelation::Overlaps,
        AllenRelation::OverlappedBy,
        AllenRelation::Starts,
        AllenRelation::StartedBy,
        AllenRelation::Meets,
        AllenRelation::MetBy,
        AllenRelation::Finishes,
        AllenRelation::FinishedBy,
        AllenRelation::During,
        AllenRelation::Contains,
        AllenRelation::Equals,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AllenRelation::Before => "before",
            AllenRelation::After => "after",
            AllenRelation::Overlaps => "overlaps",
            AllenRelation::OverlappedBy => "overlapped_by",
            AllenRelation::Starts => "starts",
            AllenRelation::StartedBy => "started_by",
            AllenRelation::Meets => "meets",
            AllenRelation::MetBy => "met_by",
            AllenRelation::Finishes => "finishes",
            AllenRelation::FinishedBy => "finished_by",
            AllenRelation::During => "during",
            AllenRelation::Contains => "contains",
            AllenRelation::Equals => "equals",
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The unique Allen relation between two proper intervals, by endpoint
/// comparison.
pub fn allen(i1: &Interval, i2: &Interval) -> AllenRelation {
    match i1.start.cmp(&i2.start) {
        Ordering::Equal => match i1.end.cmp(&i2.end) {
            Ordering::Less => AllenRelation::Starts,
            Ordering::Equal => AllenRelation::Equals,
            Ordering::Greater => AllenRelation::StartedBy,
        },
        Ordering::Less => {
            // i1 starts first.
            if i1.end < i2.start {
                AllenRelation::Before
            } else if i1.end == i2.start {
                AllenRelation::Meets
            } else {
                match i1.end.cmp(&i2.end) {
                    Ordering::Less => AllenRelation::Overlaps,
                    Ordering::Equal => AllenRelation::FinishedBy,
                    Ordering::Greater => AllenRelation::Contains,
                }
            }
        }
        Ordering::Greater => {
            // i2 starts first.
            if i2.end < i1.start {
                AllenRelation::After
            } else if i2.end == i1.start {
                AllenRelation::MetBy
            } else {
                match i1.end.cmp(&i2.end) {
                    Ordering::Less => AllenRelation::During,
                    Ordering::Equal => AllenRelation::Finishes,
                    Ordering::Greater => AllenRelation::OverlappedBy,
                }
            }
        }
    }
}

/// The relation seen from the swapped operand order:
/// `inverse(allen(a, b)) == allen(b, a)`.
pub fn inverse(rel: AllenRelation) -> AllenRelation {
    match rel {
        AllenRelation::Before => AllenRelation::After,
        AllenRelation::After => AllenRelation::Before,
        AllenRelation::Overlaps => AllenRelation::OverlappedBy,
        AllenRelation::OverlappedBy => AllenRelation::Overlaps,
        AllenRelation::Starts => AllenRelation::StartedBy,
        AllenRelation::StartedBy => AllenRelation::Starts,
        AllenRelation::Meets => AllenRelation::MetBy,
        AllenRelation::MetBy => AllenRelation::Meets,
        AllenRelation::Finishes => AllenRelation::FinishedBy,
        AllenRelation::FinishedBy => AllenRelation::Finishes,
        AllenRelation::During => AllenRelation::Contains,
        AllenRelation::Contains => AllenRelation::During,
        AllenRelation::Equals => AllenRelation::Equals,
    }
}
