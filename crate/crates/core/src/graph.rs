//! Per-frame scene graphs and per-publisher ordered graph streams.
//!
//! A [`FrameGraph`] is a labelled multigraph built from one frame's
//! detections: object nodes carry class, attributes, bounding box,
//! confidence, and an optional stable track id. Relation edges are *not*
//! precomputed per frame — the matcher evaluates spatial predicates on
//! demand, which avoids quadratic work per frame for predicates no query
//! asks about — but edges can be attached explicitly and are validated.
//!
//! Frame graphs are immutable once built and safe to hand between threads.
//! A [`GraphStream`] is owned by exactly one ingestion lane.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::ontology::{AttrValue, OntologySchema};
use crate::spatial::Rect;

/// Frame-local node identifier.
pub type NodeId = u32;

/// Stable cross-frame object identifier assigned by track association.
pub type TrackId = u64;

/// Failures of graph construction and query-side selection.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("attribute {attribute:?} = {value:?} violates the schema of class {class:?}: {detail}")]
    AttributeDomainViolation {
        class: String,
        attribute: String,
        value: String,
        detail: String,
    },
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("out-of-order timestamp: {got} after {last} (timestamps must be strictly increasing)")]
    OutOfOrderTimestamp { last: i64, got: i64 },
    #[error("unknown attribute {0:?} for the filtered nodes")]
    UnknownAttribute(String),
    #[error("invalid edge: {0}")]
    InvalidEdge(String),
}

/// One detection as it arrives from a publisher, before node ids are
/// assigned. This is also the wire shape used by the frame format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: String,
    pub bbox: Rect,
    pub conf: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, AttrValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<TrackId>,
}

/// An object node of a frame graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub node_id: NodeId,
    pub class: String,
    pub attributes: BTreeMap<String, AttrValue>,
    pub geometry: Rect,
    pub confidence: f64,
    pub track_id: Option<TrackId>,
}

/// A labelled relation edge between two nodes of the same frame graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub subject: NodeId,
    pub object: NodeId,
    pub label: String,
}

/// The scene graph of a single frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameGraph {
    pub timestamp_ms: i64,
    /// Frame number as assigned by the publisher; metadata only, never used
    /// for ordering.
    pub frame_no: u64,
    pub nodes: Vec<ObjectNode>,
    pub edges: Vec<RelationEdge>,
}

impl FrameGraph {
    pub fn node(&self, id: NodeId) -> Option<&ObjectNode> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    /// The node carrying the given track id, if present this frame.
    pub fn node_by_track(&self, track: TrackId) -> Option<&ObjectNode> {
        self.nodes.iter().find(|n| n.track_id == Some(track))
    }

    /// Attaches a relation edge, enforcing the multigraph invariants: no
    /// self-relations, both endpoints present, edge labels disjoint from
    /// class names, and no duplicate (subject, object, label) triple.
    pub fn add_edge(
        &mut self,
        edge: RelationEdge,
        schema: &OntologySchema,
    ) -> Result<(), GraphError> {
        if edge.subject == edge.object {
            return Err(GraphError::InvalidEdge(format!(
                "self-relation on node {}",
                edge.subject
            )));
        }
        for end in [edge.subject, edge.object] {
            if self.node(end).is_none() {
                return Err(GraphError::InvalidEdge(format!(
                    "endpoint {end} not in this frame"
                )));
            }
        }
        if schema.class(&edge.label).is_some() {
            return Err(GraphError::InvalidEdge(format!(
                "label {:?} is an object class name; relation labels must be disjoint",
                edge.label
            )));
        }
        if self.edges.contains(&edge) {
            return Err(GraphError::InvalidEdge(format!(
                "duplicate edge {} -[{}]-> {}",
                edge.subject, edge.label, edge.object
            )));
        }
        self.edges.push(edge);
        Ok(())
    }
}

/// Builds the frame graph for one frame of detections, validating every
/// detection against the schema. Node ids are assigned in input order.
pub fn build_mekg(
    detections: &[Detection],
    schema: &OntologySchema,
    timestamp_ms: i64,
    frame_no: u64,
) -> Result<FrameGraph, GraphError> {
    let mut nodes = Vec::with_capacity(detections.len());
    for (i, det) in detections.iter().enumerate() {
        if schema.class(&det.class).is_none() {
            return Err(GraphError::UnknownClass(det.class.clone()));
        }
        if !det.bbox.is_valid() {
            return Err(GraphError::BadGeometry(format!(
                "detection {i} ({}): negative or non-finite extent {:?}",
                det.class, det.bbox
            )));
        }
        if !(0.0..=1.0).contains(&det.conf) {
            return Err(GraphError::InvalidConfidence(det.conf));
        }
        for (attr, value) in &det.attrs {
            let domain = schema
                .attribute_domain(&det.class, attr)
                .map_err(|_| GraphError::UnknownClass(det.class.clone()))?;
            match domain {
                None => {
                    return Err(GraphError::AttributeDomainViolation {
                        class: det.class.clone(),
                        attribute: attr.clone(),
                        value: value.to_string(),
                        detail: "attribute not declared on the class or its ancestors".into(),
                    })
                }
                Some(d) if !d.accepts(value) => {
                    return Err(GraphError::AttributeDomainViolation {
                        class: det.class.clone(),
                        attribute: attr.clone(),
                        value: value.to_string(),
                        detail: "value outside the declared domain".into(),
                    })
                }
                Some(_) => {}
            }
        }
        nodes.push(ObjectNode {
            node_id: i as NodeId,
            class: det.class.clone(),
            attributes: det.attrs.clone(),
            geometry: det.bbox,
            confidence: det.conf,
            track_id: det.track,
        });
    }
    Ok(FrameGraph {
        timestamp_ms,
        frame_no,
        nodes,
        edges: Vec::new(),
    })
}

/// A strictly time-ordered sequence of frame graphs from one publisher.
#[derive(Debug, Clone, Default)]
pub struct GraphStream {
    pub publisher_id: String,
    frames: Vec<FrameGraph>,
}

impl GraphStream {
    pub fn new(publisher_id: impl Into<String>) -> Self {
        GraphStream {
            publisher_id: publisher_id.into(),
            frames: Vec::new(),
        }
    }

    /// Appends a frame; its timestamp must exceed the last one.
    pub fn append(&mut self, graph: FrameGraph) -> Result<(), GraphError> {
        if let Some(last) = self.last_timestamp() {
            if graph.timestamp_ms <= last {
                return Err(GraphError::OutOfOrderTimestamp {
                    last,
                    got: graph.timestamp_ms,
                });
            }
        }
        self.frames.push(graph);
        Ok(())
    }

    pub fn last_timestamp(&self) -> Option<i64> {
        self.frames.last().map(|g| g.timestamp_ms)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[FrameGraph] {
        &self.frames
    }
}

/// All nodes whose class equals or is a subclass of `label` — the semantic
/// enrichment step that lets a `Vehicle` query find `Car` detections.
pub fn nodes_by_class<'a>(
    graph: &'a FrameGraph,
    label: &str,
    schema: &OntologySchema,
) -> Result<Vec<&'a ObjectNode>, GraphError> {
    if schema.class(label).is_none() {
        return Err(GraphError::UnknownClass(label.to_string()));
    }
    let mut out = Vec::new();
    for node in &graph.nodes {
        let matches = schema
            .is_subclass(&node.class, label)
            .map_err(|_| GraphError::UnknownClass(node.class.clone()))?;
        if matches {
            out.push(node);
        }
    }
    Ok(out)
}

/// Keeps the nodes satisfying every `(attribute = value)` predicate. Each
/// predicate attribute must be declared for every node it is tested
/// against — an undeclared attribute is an error, not a non-match.
pub fn filter_by_attributes<'a>(
    nodes: &[&'a ObjectNode],
    predicates: &[(String, AttrValue)],
    schema: &OntologySchema,
) -> Result<Vec<&'a ObjectNode>, GraphError> {
    let mut out = Vec::new();
    'node: for &node in nodes {
        for (attr, wanted) in predicates {
            let declared = schema
                .attribute_domain(&node.class, attr)
                .map_err(|_| GraphError::UnknownClass(node.class.clone()))?;
            if declared.is_none() {
                return Err(GraphError::UnknownAttribute(attr.clone()));
            }
            if node.attributes.get(attr) != Some(wanted) {
                continue 'node;
            }
        }
        out.push(node);
    }
    Ok(out)
}
