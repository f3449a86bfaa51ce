//! The event-processing runtime.
//!
//! An [`Engine`] owns an ontology, a rule registry, and a set of
//! publisher lanes. Frames arrive per publisher through
//! [`Engine::ingest_frame`]; each lane enforces strictly increasing
//! timestamps, assigns track ids by IoU association against the previous
//! frame, lifts detections into scene graphs, and feeds every window
//! registered for that publisher. A completed window becomes a *state*
//! (a non-empty run of consecutive frames) which is handed to the
//! matcher exactly once. Matching evaluates each registered query
//! against the state and notifies subscribers.
//!
//! Concurrency contract: one lane = one mutex, so frames of a single
//! publisher are processed serially in arrival order while distinct
//! publishers proceed in parallel. Queries and subscriptions live behind
//! read-write locks and may be changed while streams are running; a
//! change takes effect at the next state boundary.

pub mod config;
pub mod query;
pub mod sink;
pub mod window;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use serde::Serialize;

use crate::graph::{build_mekg, filter_by_attributes, nodes_by_class, FrameGraph, GraphError, TrackId};
use crate::io::FrameRecord;
use crate::ontology::OntologySchema;
use crate::rules::{
    eval_overtake, eval_parking, eval_pattern, OvertakeConfig, ParkingConfig, PatternRule,
    RuleKind, RuleRegistry, SlotOccupancy,
};
use crate::spatial::Rect;
use crate::temporal::TimeSpan;
use crate::track::{associate_step, PrevBoxes};

pub use config::{ConfigError, EngineConfig, EngineSettings, PublisherConfig};
pub use query::{parse_query, ObjectSpec, Query, QueryParseError, RelationSpec};
pub use sink::{
    normalize_log, parse_log, MatchKind, NotificationRecord, NotificationSink, VecSink,
    WriterSink,
};
pub use window::{WindowInstance, WindowSpec};

/// Errors surfaced by engine operations.
#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    /// The named publisher has not been registered.
    #[error("unknown publisher {0:?}")]
    UnknownPublisher(String),
    /// A publisher with this id already exists.
    #[error("publisher {0:?} is already registered")]
    DuplicatePublisher(String),
    /// A frame arrived at or before the lane's last accepted timestamp.
    #[error("out-of-order frame on {publisher:?}: got t={got} after t={last}")]
    OutOfOrderTimestamp {
        publisher: String,
        last: i64,
        got: i64,
    },
    /// A query with this id already exists.
    #[error("query {0:?} is already registered")]
    DuplicateQueryId(String),
    /// The named query has not been registered.
    #[error("unknown query {0:?}")]
    UnknownQuery(String),
    /// The query failed semantic validation against schema and rules.
    #[error("query validation failed: {0}")]
    Validation(String),
    /// A frame could not be lifted into a scene graph.
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// What a registered relation compiles down to.
enum CompiledRule {
    Overtake(OvertakeConfig),
    Parking {
        object_class: String,
        slot_class: String,
        threshold: f64,
    },
    Pattern(PatternRule),
}

/// A query after validation, with its relation resolved to an evaluator.
struct CompiledQuery {
    query: Query,
    rule: Option<CompiledRule>,
}

/// One object hit inside a state, as serialized into notification bindings.
#[derive(Debug, Clone, Serialize)]
struct ObjectHit {
    t_ms: i64,
    class: String,
    bbox: Rect,
    #[serde(skip_serializing_if = "Option::is_none")]
    track: Option<TrackId>,
}

/// Per-publisher mutable stream state. Guarded by one mutex; everything
/// that must happen serially for a publisher happens under it.
struct Lane {
    publisher_id: String,
    last_ts: Option<i64>,
    prev_boxes: PrevBoxes,
    next_track: TrackId,
    /// Retained scene graphs (only when `retain_streams` is set).
    history: Vec<Arc<FrameGraph>>,
    /// One independent window instance per registered query.
    windows: BTreeMap<String, WindowInstance>,
    /// Per-query state sequence numbers.
    state_seq: BTreeMap<String, u64>,
    /// Slot classes any parking query on this engine cares about.
    slot_classes: BTreeSet<String>,
    /// First-seen geometry of each slot object, keyed (slot class, track).
    slot_geoms: BTreeMap<(String, TrackId), Rect>,
    /// Carry-over occupancy per parking query.
    parking_carry: BTreeMap<String, SlotOccupancy>,
    /// Last emitted transition start per (query, pair-min, pair-max,
    /// overtaker), for duplicate suppression across overlapping states.
    overtake_last: BTreeMap<(String, TrackId, TrackId, TrackId), i64>,
}

impl Lane {
    fn new(publisher_id: &str) -> Self {
        Lane {
            publisher_id: publisher_id.to_owned(),
            last_ts: None,
            prev_boxes: Vec::new(),
            next_track: 1,
            history: Vec::new(),
            windows: BTreeMap::new(),
            state_seq: BTreeMap::new(),
            slot_classes: BTreeSet::new(),
            slot_geoms: BTreeMap::new(),
            parking_carry: BTreeMap::new(),
            overtake_last: BTreeMap::new(),
        }
    }
}

/// One line of the optional state backend log: which states were handed
/// to the matcher, in order, with their extent and the matcher's own
/// processing time — recorded for every state, matched or not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateSummary {
    pub publisher_id: String,
    pub query_id: String,
    /// 0-based sequence number of this state within (publisher, query).
    pub seq: u64,
    pub span_start_ms: i64,
    pub span_end_ms: i64,
    pub frames: usize,
    pub nodes: usize,
    /// State receipt to notification emission (or to the no-match
    /// decision), in microseconds.
    pub latency_us: u64,
}

/// Monotonic counters exposed by [`Engine::stats`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EngineStats {
    pub frames_accepted: u64,
    pub frames_rejected: u64,
    pub states_emitted: u64,
    pub notifications: u64,
    pub error_notifications: u64,
}

/// What a single `ingest_frame` (or `flush`) call caused downstream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    /// States completed and matched during the call.
    pub states: usize,
    /// Notification records emitted (including error records).
    pub notifications: usize,
}

#[derive(Default)]
struct Counters {
    frames_accepted: AtomicU64,
    frames_rejected: AtomicU64,
    states_emitted: AtomicU64,
    notifications: AtomicU64,
    error_notifications: AtomicU64,
}

struct Subscription {
    subscriber_id: String,
    sink: Arc<dyn NotificationSink>,
}

/// The stream-processing engine. See the module docs for the pipeline.
pub struct Engine {
    schema: OntologySchema,
    registry: RuleRegistry,
    settings: EngineSettings,
    queries: RwLock<BTreeMap<String, Arc<CompiledQuery>>>,
    lanes: RwLock<BTreeMap<String, Arc<Mutex<Lane>>>>,
    subscriptions: RwLock<BTreeMap<u64, Subscription>>,
    next_subscription: AtomicU64,
    counters: Counters,
    state_log: Mutex<Vec<StateSummary>>,
}

impl Engine {
    /// Creates an engine with the built-in rule registry.
    pub fn new(schema: OntologySchema, settings: EngineSettings) -> Self {
        Self::with_registry(schema, RuleRegistry::new(), settings)
    }

    /// Creates an engine with a caller-supplied rule registry (for custom
    /// pattern rules referenced by relation classes in the schema).
    pub fn with_registry(
        schema: OntologySchema,
        registry: RuleRegistry,
        settings: EngineSettings,
    ) -> Self {
        Engine {
            schema,
            registry,
            settings,
            queries: RwLock::new(BTreeMap::new()),
            lanes: RwLock::new(BTreeMap::new()),
            subscriptions: RwLock::new(BTreeMap::new()),
            next_subscription: AtomicU64::new(1),
            counters: Counters::default(),
            state_log: Mutex::new(Vec::new()),
        }
    }

    pub fn schema(&self) -> &OntologySchema {
        &self.schema
    }

    pub fn settings(&self) -> &EngineSettings {
        &self.settings
    }

    /// Registers a publisher lane. Ids must be unique.
    pub fn register_publisher(&self, publisher_id: &str) -> Result<(), EngineError> {
        let mut lanes = self.lanes.write().expect("lanes lock");
        if lanes.contains_key(publisher_id) {
            return Err(EngineError::DuplicatePublisher(publisher_id.to_owned()));
        }
        lanes.insert(
            publisher_id.to_owned(),
            Arc::new(Mutex::new(Lane::new(publisher_id))),
        );
        Ok(())
    }

    /// Validates and registers a query. All named publishers must already
    /// exist; classes, attributes, and the relation are checked against
    /// the schema and rule registry. The query starts to see frames at the
    /// next frame each named lane receives.
    pub fn register_query(&self, query: Query) -> Result<(), EngineError> {
        let compiled = self.compile_query(&query)?;

        // Snapshot the named lanes up front so no two locks are ever held
        // at once (ingest takes lane → queries in that order).
        let lane_arcs: Vec<Arc<Mutex<Lane>>> = {
            let lanes = self.lanes.read().expect("lanes lock");
            let mut arcs = Vec::new();
            for publisher in &query.publishers {
                match lanes.get(publisher) {
                    Some(arc) => arcs.push(arc.clone()),
                    None => {
                        return Err(EngineError::Validation(format!(
                            "query {:?} names unknown publisher {publisher:?}",
                            query.query_id
                        )))
                    }
                }
            }
            arcs
        };

        let query_id = query.query_id.clone();
        let window = query.window.clone();
        let slot_class = match &compiled.rule {
            Some(CompiledRule::Parking { slot_class, .. }) => Some(slot_class.clone()),
            _ => None,
        };
        {
            let mut queries = self.queries.write().expect("queries lock");
            if queries.contains_key(&query_id) {
                return Err(EngineError::DuplicateQueryId(query_id));
            }
            queries.insert(query_id.clone(), Arc::new(compiled));
        }
        for arc in lane_arcs {
            let mut lane = arc.lock().expect("lane lock");
            lane.windows
                .insert(query_id.clone(), WindowInstance::new(window.clone()));
            if let Some(class) = &slot_class {
                lane.slot_classes.insert(class.clone());
            }
        }
        Ok(())
    }

    /// Removes a query and its per-lane windows. Buffered partial windows
    /// are discarded.
    pub fn deregister_query(&self, query_id: &str) -> Result<(), EngineError> {
        let removed = {
            let mut queries = self.queries.write().expect("queries lock");
            queries.remove(query_id)
        };
        if removed.is_none() {
            return Err(EngineError::UnknownQuery(query_id.to_owned()));
        }
        let lane_arcs: Vec<Arc<Mutex<Lane>>> = {
            let lanes = self.lanes.read().expect("lanes lock");
            lanes.values().cloned().collect()
        };
        for arc in lane_arcs {
            let mut lane = arc.lock().expect("lane lock");
            lane.windows.remove(query_id);
            lane.state_seq.remove(query_id);
            lane.parking_carry.remove(query_id);
            lane.overtake_last
                .retain(|(qid, _, _, _), _| qid != query_id);
        }
        Ok(())
    }

    /// Attaches a sink for one subscriber id. Returns a handle for
    /// [`Engine::unsubscribe`]. Several sinks may serve the same
    /// subscriber; each receives every record addressed to it.
    pub fn subscribe(&self, subscriber_id: &str, sink: Arc<dyn NotificationSink>) -> u64 {
        let handle = self.next_subscription.fetch_add(1, Ordering::Relaxed);
        self.subscriptions.write().expect("subscriptions lock").insert(
            handle,
            Subscription {
                subscriber_id: subscriber_id.to_owned(),
                sink,
            },
        );
        handle
    }

    /// Detaches a sink. Queries for the subscriber stay registered; their
    /// notifications are still produced and counted, just not delivered
    /// to the removed sink. Returns false for an unknown handle.
    pub fn unsubscribe(&self, handle: u64) -> bool {
        self.subscriptions
            .write()
            .expect("subscriptions lock")
            .remove(&handle)
            .is_some()
    }

    /// Feeds one frame record into a publisher lane. Rejected frames
    /// (out-of-order timestamp, malformed detections) leave the lane
    /// unchanged and are counted in `frames_rejected`.
    pub fn ingest_frame(
        &self,
        publisher_id: &str,
        record: &FrameRecord,
    ) -> Result<IngestReport, EngineError> {
        let lane_arc = {
            let lanes = self.lanes.read().expect("lanes lock");
            lanes
                .get(publisher_id)
                .cloned()
                .ok_or_else(|| EngineError::UnknownPublisher(publisher_id.to_owned()))?
        };
        let mut lane = lane_arc.lock().expect("lane lock");

        if let Some(last) = lane.last_ts {
            if record.t_ms <= last {
                self.counters.frames_rejected.fetch_add(1, Ordering::Relaxed);
                return Err(EngineError::OutOfOrderTimestamp {
                    publisher: publisher_id.to_owned(),
                    last,
                    got: record.t_ms,
                });
            }
        }

        let mut detections = record.detections.clone();
        let mut next_track = lane.next_track;
        let prev = associate_step(
            &lane.prev_boxes,
            &mut detections,
            self.settings.track_iou,
            &mut next_track,
        );
        let graph = match build_mekg(&detections, &self.schema, record.t_ms, record.frame) {
            Ok(g) => g,
            Err(e) => {
                self.counters.frames_rejected.fetch_add(1, Ordering::Relaxed);
                return Err(EngineError::Graph(e));
            }
        };
        lane.prev_boxes = prev;
        lane.next_track = next_track;
        lane.last_ts = Some(record.t_ms);
        self.counters.frames_accepted.fetch_add(1, Ordering::Relaxed);

        let frame = Arc::new(graph);
        self.observe_slots(&mut lane, &frame);
        if self.settings.retain_streams {
            lane.history.push(frame.clone());
        }

        let mut report = IngestReport::default();
        let query_ids: Vec<String> = lane.windows.keys().cloned().collect();
        for query_id in query_ids {
            let states = match lane.windows.get_mut(&query_id) {
                Some(window) => window.offer(&frame),
                None => continue,
            };
            for frames in states {
                self.process_state(&mut lane, &query_id, frames, &mut report);
            }
        }
        Ok(report)
    }

    /// Closes out partially filled time and absolute windows on every
    /// lane (count windows discard their partials), matching whatever
    /// states that releases. Call once at end of stream.
    pub fn flush(&self) -> IngestReport {
        let lane_arcs: Vec<Arc<Mutex<Lane>>> = {
            let lanes = self.lanes.read().expect("lanes lock");
            lanes.values().cloned().collect()
        };
        let mut report = IngestReport::default();
        for arc in lane_arcs {
            let mut lane = arc.lock().expect("lane lock");
            let query_ids: Vec<String> = lane.windows.keys().cloned().collect();
            for query_id in query_ids {
                let flushed = match lane.windows.get_mut(&query_id) {
                    Some(window) => window.flush(),
                    None => None,
                };
                if let Some(frames) = flushed {
                    self.process_state(&mut lane, &query_id, frames, &mut report);
                }
            }
        }
        report
    }

    /// Subscriber ids named by currently registered queries.
    pub fn subscriber_ids(&self) -> BTreeSet<String> {
        self.queries
            .read()
            .expect("queries lock")
            .values()
            .map(|q| q.query.subscriber_id.clone())
            .collect()
    }

    pub fn stats(&self) -> EngineStats {
        EngineStats {
            frames_accepted: self.counters.frames_accepted.load(Ordering::Relaxed),
            frames_rejected: self.counters.frames_rejected.load(Ordering::Relaxed),
            states_emitted: self.counters.states_emitted.load(Ordering::Relaxed),
            notifications: self.counters.notifications.load(Ordering::Relaxed),
            error_notifications: self.counters.error_notifications.load(Ordering::Relaxed),
        }
    }

    /// The state backend log (empty unless `state_backend` is enabled).
    pub fn state_log(&self) -> Vec<StateSummary> {
        self.state_log.lock().expect("state log lock").clone()
    }

    /// Retained scene graphs of one lane (empty unless `retain_streams`).
    pub fn lane_history(&self, publisher_id: &str) -> Result<Vec<Arc<FrameGraph>>, EngineError> {
        let lane_arc = {
            let lanes = self.lanes.read().expect("lanes lock");
            lanes
                .get(publisher_id)
                .cloned()
                .ok_or_else(|| EngineError::UnknownPublisher(publisher_id.to_owned()))?
        };
        let lane = lane_arc.lock().expect("lane lock");
        Ok(lane.history.clone())
    }

    // ------------------------------------------------------------------
    // Internals
    // ------------------------------------------------------------------

    /// Validates a query against schema, registry, and window rules.
    fn compile_query(&self, query: &Query) -> Result<CompiledQuery, EngineError> {
        if query.object_specs.is_empty() && query.relation_spec.is_none() {
            return Err(EngineError::Validation(format!(
                "query {:?} selects nothing: needs an object spec or a relation",
                query.query_id
            )));
        }
        if query.publishers.is_empty() {
            return Err(EngineError::Validation(format!(
                "query {:?} names no publishers",
                query.query_id
            )));
        }
        query
            .window
            .validate()
            .map_err(EngineError::Validation)?;
        for spec in &query.object_specs {
            if self.schema.class(&spec.class).is_none() {
                return Err(EngineError::Validation(format!(
                    "query {:?} selects unknown class {:?}",
                    query.query_id, spec.class
                )));
            }
            for (attr, value) in &spec.predicates {
                let domain = self
                    .schema
                    .attribute_domain(&spec.class, attr)
                    .map_err(|e| EngineError::Validation(e.to_string()))?;
                match domain {
                    None => {
                        return Err(EngineError::Validation(format!(
                            "class {:?} declares no attribute {attr:?}",
                            spec.class
                        )))
                    }
                    Some(d) if !d.accepts(value) => {
                        return Err(EngineError::Validation(format!(
                            "value {value:?} is outside the domain of {}.{attr}",
                            spec.class
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        let rule = match &query.relation_spec {
            None => None,
            Some(spec) => Some(self.compile_relation(query, spec)?),
        };
        Ok(CompiledQuery {
            query: query.clone(),
            rule,
        })
    }

    fn compile_relation(
        &self,
        query: &Query,
        spec: &RelationSpec,
    ) -> Result<CompiledRule, EngineError> {
        let relation = self.schema.relation(&spec.relation).ok_or_else(|| {
            EngineError::Validation(format!(
                "query {:?} names unknown relation class {:?}",
                query.query_id, spec.relation
            ))
        })?;
        // The query's role classes may refine (be subclasses of) the
        // classes declared on the relation, but not widen them.
        for (bound, declared) in [
            (&spec.role_a, &relation.role_classes.0),
            (&spec.role_b, &relation.role_classes.1),
        ] {
            let ok = self
                .schema
                .is_subclass(bound, declared)
                .map_err(|e| EngineError::Validation(e.to_string()))?;
            if !ok {
                return Err(EngineError::Validation(format!(
                    "role class {bound:?} does not refine {declared:?} required by {:?}",
                    spec.relation
                )));
            }
        }
        let kind = self.registry.get(&relation.rule_name).map_err(|e| {
            EngineError::Validation(format!(
                "relation {:?} is bound to an unusable rule: {e}",
                spec.relation
            ))
        })?;
        match kind {
            RuleKind::BuiltinOvertake => {
                if spec.threshold.is_some() {
                    return Err(EngineError::Validation(
                        "THRESHOLD only applies to occupancy relations".to_owned(),
                    ));
                }
                let mut cfg = OvertakeConfig::new(&spec.role_a, &spec.role_b);
                cfg.axis = self.settings.axis;
                cfg.max_gap = self.settings.max_gap;
                Ok(CompiledRule::Overtake(cfg))
            }
            RuleKind::BuiltinParking => {
                let threshold = spec.threshold.unwrap_or(self.settings.parking_threshold);
                if !(threshold > 0.0 && threshold <= 1.0) {
                    return Err(EngineError::Validation(format!(
                        "occupancy threshold must lie in (0, 1], got {threshold}"
                    )));
                }
                Ok(CompiledRule::Parking {
                    object_class: spec.role_a.clone(),
                    slot_class: spec.role_b.clone(),
                    threshold,
                })
            }
            RuleKind::Pattern(rule) => {
                if spec.threshold.is_some() {
                    return Err(EngineError::Validation(
                        "THRESHOLD only applies to occupancy relations".to_owned(),
                    ));
                }
                if rule.roles.len() != 2 {
                    return Err(EngineError::Validation(format!(
                        "rule {:?} binds {} roles; queries bind exactly two",
                        rule.name,
                        rule.roles.len()
                    )));
                }
                // Substitute the query's (possibly refined) role classes.
                let mut bound = rule.clone();
                bound.roles[0].1 = spec.role_a.clone();
                bound.roles[1].1 = spec.role_b.clone();
                Ok(CompiledRule::Pattern(bound))
            }
        }
    }

    /// Records first-seen geometry for slot objects on this lane.
    fn observe_slots(&self, lane: &mut Lane, frame: &FrameGraph) {
        if lane.slot_classes.is_empty() {
            return;
        }
        let classes: Vec<String> = lane.slot_classes.iter().cloned().collect();
        for node in &frame.nodes {
            for slot_class in &classes {
                let is_slot = self
                    .schema
                    .is_subclass(&node.class, slot_class)
                    .unwrap_or(false);
                if !is_slot {
                    continue;
                }
                let Some(track) = node.track_id else {
                    continue;
                };
                lane.slot_geoms
                    .entry((slot_class.clone(), track))
                    .or_insert(node.geometry);
            }
        }
    }

    /// Evaluates one completed state against one query and notifies.
    fn process_state(
        &self,
        lane: &mut Lane,
        query_id: &str,
        frames: Vec<Arc<FrameGraph>>,
        report: &mut IngestReport,
    ) {
        debug_assert!(!frames.is_empty(), "windows never emit empty states");
        let compiled = {
            let queries = self.queries.read().expect("queries lock");
            match queries.get(query_id) {
                Some(arc) => arc.clone(),
                None => return, // deregistered between buffering and close
            }
        };
        let started = Instant::now();
        let span = TimeSpan {
            start_ms: frames[0].timestamp_ms,
            end_ms: frames[frames.len() - 1].timestamp_ms,
        };
        let seq = {
            let counter = lane.state_seq.entry(query_id.to_owned()).or_insert(0);
            let seq = *counter;
            *counter += 1;
            seq
        };
        self.counters.states_emitted.fetch_add(1, Ordering::Relaxed);
        report.states += 1;

        let refs: Vec<&FrameGraph> = frames.iter().map(|f| f.as_ref()).collect();
        let mut outputs: Vec<(MatchKind, serde_json::Value)> = Vec::new();
        let mut errors: Vec<String> = Vec::new();

        if !compiled.query.object_specs.is_empty() {
            match self.match_objects(&refs, &compiled.query.object_specs) {
                Ok(hits) if hits.is_empty() => {}
                Ok(hits) => outputs.push((
                    MatchKind::Objects,
                    serde_json::to_value(hits).expect("object hits serialize"),
                )),
                Err(e) => errors.push(e.to_string()),
            }
        }
        if let Some(rule) = &compiled.rule {
            match self.match_rule(lane, query_id, rule, &refs, span) {
                Ok(Some(output)) => outputs.push(output),
                Ok(None) => {}
                Err(e) => errors.push(e.to_string()),
            }
        }

        let latency_us = started.elapsed().as_micros().min(u64::MAX as u128) as u64;
        if self.settings.state_backend {
            let nodes = frames.iter().map(|f| f.nodes.len()).sum();
            self.state_log.lock().expect("state log lock").push(StateSummary {
                publisher_id: lane.publisher_id.clone(),
                query_id: query_id.to_owned(),
                seq,
                span_start_ms: span.start_ms,
                span_end_ms: span.end_ms,
                frames: frames.len(),
                nodes,
                latency_us,
            });
        }
        let subscriptions = self.subscriptions.read().expect("subscriptions lock");
        let mut deliver = |kind: MatchKind, bindings: serde_json::Value| {
            let record = NotificationRecord {
                query_id: query_id.to_owned(),
                subscriber_id: compiled.query.subscriber_id.clone(),
                span_start_ms: span.start_ms,
                span_end_ms: span.end_ms,
                match_kind: kind,
                bindings,
                latency_us,
            };
            self.counters.notifications.fetch_add(1, Ordering::Relaxed);
            report.notifications += 1;
            for sub in subscriptions.values() {
                if sub.subscriber_id == compiled.query.subscriber_id {
                    sub.sink.deliver(&record);
                }
            }
        };
        for (kind, bindings) in outputs {
            deliver(kind, bindings);
        }
        for message in errors {
            self.counters
                .error_notifications
                .fetch_add(1, Ordering::Relaxed);
            deliver(
                MatchKind::Error,
                serde_json::json!([{ "error": message }]),
            );
        }
    }

    /// Selects objects per frame for every spec, deduplicating across
    /// specs by (timestamp, node). With enrichment off, only exact class
    /// labels match; with it on, subclasses count.
    fn match_objects(
        &self,
        frames: &[&FrameGraph],
        specs: &[ObjectSpec],
    ) -> Result<Vec<ObjectHit>, GraphError> {
        let mut seen: BTreeSet<(i64, u32)> = BTreeSet::new();
        let mut hits = Vec::new();
        for frame in frames {
            for spec in specs {
                let selected: Vec<&crate::graph::ObjectNode> = if self.settings.enrichment {
                    nodes_by_class(frame, &spec.class, &self.schema)?
                } else {
                    frame
                        .nodes
                        .iter()
                        .filter(|n| n.class == spec.class)
                        .collect()
                };
                let filtered = filter_by_attributes(&selected, &spec.predicates, &self.schema)?;
                for node in filtered {
                    if !seen.insert((frame.timestamp_ms, node.node_id)) {
                        continue;
                    }
                    hits.push(ObjectHit {
                        t_ms: frame.timestamp_ms,
                        class: node.class.clone(),
                        bbox: node.geometry,
                        track: node.track_id,
                    });
                }
            }
        }
        Ok(hits)
    }

    fn match_rule(
        &self,
        lane: &mut Lane,
        query_id: &str,
        rule: &CompiledRule,
        frames: &[&FrameGraph],
        span: TimeSpan,
    ) -> Result<Option<(MatchKind, serde_json::Value)>, crate::rules::RuleError> {
        match rule {
            CompiledRule::Overtake(cfg) => {
                let matches = eval_overtake(frames, cfg, &self.schema)?;
                // Sliding windows re-observe the same transition in
                // several states; suppress repeats of one (pair,
                // overtaker) until a full state span has elapsed.
                let cooldown = span.end_ms - span.start_ms;
                let mut kept = Vec::new();
                for m in matches {
                    let (Some(&s), Some(&r), Some(&o)) = (
                        m.bound.get("subject"),
                        m.bound.get("reference"),
                        m.bound.get("overtaker"),
                    ) else {
                        continue;
                    };
                    let key = (query_id.to_owned(), s.min(r), s.max(r), o);
                    let start = m.span.start_ms;
                    let emit = match lane.overtake_last.get(&key) {
                        Some(&last) => start.saturating_sub(last) >= cooldown.max(1),
                        None => true,
                    };
                    if emit {
                        lane.overtake_last.insert(key, start);
                        kept.push(m);
                    }
                }
                if kept.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some((
                        MatchKind::Pattern,
                        serde_json::to_value(kept).expect("rule matches serialize"),
                    )))
                }
            }
            CompiledRule::Parking {
                object_class,
                slot_class,
                threshold,
            } => {
                let mut slots = BTreeMap::new();
                for ((class, track), rect) in &lane.slot_geoms {
                    if class == slot_class {
                        slots.insert(format!("slot_{track}"), *rect);
                    }
                }
                if slots.is_empty() {
                    return Ok(None); // no slot objects observed yet
                }
                let mut cfg = ParkingConfig::new(object_class);
                cfg.slots = slots;
                cfg.threshold = *threshold;
                let carry = lane.parking_carry.get(query_id);
                let (events, occupancy) = eval_parking(frames, &cfg, carry, &self.schema)?;
                lane.parking_carry.insert(query_id.to_owned(), occupancy);
                if events.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some((
                        MatchKind::Occupancy,
                        serde_json::to_value(events).expect("occupancy events serialize"),
                    )))
                }
            }
            CompiledRule::Pattern(rule) => {
                let matches = eval_pattern(rule, frames, &self.schema)?;
                if matches.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some((
                        MatchKind::Pattern,
                        serde_json::to_value(matches).expect("rule matches serialize"),
                    )))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::default_traffic_schema;
    use crate::graph::Detection;
    use crate::ontology::AttrValue;
    use crate::scenario::{generate_scenario, ScenarioKind, ScenarioSpec};

    fn engine() -> Engine {
        Engine::new(default_traffic_schema(), EngineSettings::default())
    }

    fn car(x: f64, color: &str) -> Detection {
        Detection {
            class: "Car".to_owned(),
            bbox: Rect::new(x, 20.0, 10.0, 6.0),
            conf: 0.9,
            attrs: [("color".to_owned(), AttrValue::Text(color.to_owned()))]
                .into_iter()
                .collect(),
            track: None,
        }
    }

    fn frame_record(frame: u64, t_ms: i64, detections: Vec<Detection>) -> FrameRecord {
        FrameRecord {
            stream: "P1".to_owned(),
            frame,
            t_ms,
            detections,
        }
    }

    fn query(text: &str) -> Query {
        parse_query(text).expect("query parses")
    }

    #[test]
    fn object_query_produces_one_notification_per_complete_window() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 5 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());

        let mut states = 0;
        for i in 0..12u64 {
            let report = engine
                .ingest_frame("P1", &frame_record(i, i as i64 * 33, vec![car(5.0, "white")]))
                .unwrap();
            states += report.states;
        }
        assert_eq!(states, 2);
        let records = sink.records();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].match_kind, MatchKind::Objects);
        assert_eq!(records[0].span_start_ms, 0);
        assert_eq!(records[0].span_end_ms, 132);
        assert_eq!(records[1].span_start_ms, 165);
        assert_eq!(records[1].span_end_ms, 297);
        let hits = records[0].bindings.as_array().unwrap();
        assert_eq!(hits.len(), 5, "one hit per frame in the state");
        assert_eq!(hits[0]["class"], "Car");
        assert_eq!(hits[0]["track"], 1, "association keeps one stable track");
        // Two frames buffered but never completed: no third record.
        assert_eq!(engine.stats().states_emitted, 2);
    }

    #[test]
    fn empty_matches_produce_no_notification() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Person WINDOW COUNT 2 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        for i in 0..4u64 {
            engine
                .ingest_frame("P1", &frame_record(i, i as i64 * 33, vec![car(5.0, "white")]))
                .unwrap();
        }
        assert_eq!(engine.stats().states_emitted, 2, "states still close");
        assert!(sink.records().is_empty(), "no Person ⇒ no notification");
    }

    #[test]
    fn enrichment_widens_a_vehicle_query_to_cars() {
        let schema = default_traffic_schema();
        let on = Engine::new(schema.clone(), EngineSettings::default());
        let off = Engine::new(
            schema,
            EngineSettings {
                enrichment: false,
                ..EngineSettings::default()
            },
        );
        for engine in [&on, &off] {
            engine.register_publisher("P1").unwrap();
            engine
                .register_query(query(
                    "QUERY q1 SUBSCRIBER s1 OBJECT Vehicle WINDOW COUNT 2 FROM P1",
                ))
                .unwrap();
        }
        let sink_on = Arc::new(VecSink::new());
        let sink_off = Arc::new(VecSink::new());
        on.subscribe("s1", sink_on.clone());
        off.subscribe("s1", sink_off.clone());
        for i in 0..2u64 {
            let record = frame_record(i, i as i64 * 33, vec![car(5.0, "white")]);
            on.ingest_frame("P1", &record).unwrap();
            off.ingest_frame("P1", &record).unwrap();
        }
        assert_eq!(sink_on.records().len(), 1);
        assert_eq!(
            sink_on.records()[0].bindings.as_array().unwrap().len(),
            2,
            "the Car counts as a Vehicle per frame"
        );
        assert!(
            sink_off.records().is_empty(),
            "exact-label matching finds no literal Vehicle"
        );
    }

    #[test]
    fn attribute_predicates_filter_hits() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Car WHERE color=black WINDOW COUNT 1 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        engine
            .ingest_frame(
                "P1",
                &frame_record(0, 0, vec![car(5.0, "white"), car(50.0, "black")]),
            )
            .unwrap();
        let records = sink.records();
        assert_eq!(records.len(), 1);
        let hits = records[0].bindings.as_array().unwrap();
        assert_eq!(hits.len(), 1, "only the black car passes the filter");
        assert_eq!(hits[0]["bbox"][0], 50.0);
    }

    #[test]
    fn out_of_order_frames_are_rejected_and_counted() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .ingest_frame("P1", &frame_record(0, 100, vec![]))
            .unwrap();
        let err = engine
            .ingest_frame("P1", &frame_record(1, 100, vec![]))
            .unwrap_err();
        assert!(matches!(
            err,
            EngineError::OutOfOrderTimestamp {
                last: 100,
                got: 100,
                ..
            }
        ));
        // The lane still accepts the next in-order frame.
        engine
            .ingest_frame("P1", &frame_record(2, 101, vec![]))
            .unwrap();
        let stats = engine.stats();
        assert_eq!(stats.frames_accepted, 2);
        assert_eq!(stats.frames_rejected, 1);
    }

    #[test]
    fn registration_validation_rejects_bad_queries() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 5 FROM P1",
            ))
            .unwrap();

        let dup = engine.register_query(query(
            "QUERY q1 SUBSCRIBER s2 OBJECT Bike WINDOW COUNT 5 FROM P1",
        ));
        assert!(matches!(dup, Err(EngineError::DuplicateQueryId(_))));

        let unknown_pub = engine.register_query(query(
            "QUERY q2 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 5 FROM P9",
        ));
        assert!(matches!(unknown_pub, Err(EngineError::Validation(_))));

        let unknown_class = engine.register_query(query(
            "QUERY q3 SUBSCRIBER s1 OBJECT Dragon WINDOW COUNT 5 FROM P1",
        ));
        assert!(matches!(unknown_class, Err(EngineError::Validation(_))));

        let unknown_attr = engine.register_query(query(
            "QUERY q4 SUBSCRIBER s1 OBJECT Car WHERE wingspan=3 WINDOW COUNT 5 FROM P1",
        ));
        assert!(matches!(unknown_attr, Err(EngineError::Validation(_))));

        let bad_value = engine.register_query(query(
            "QUERY q5 SUBSCRIBER s1 OBJECT Car WHERE color=chartreuse WINDOW COUNT 5 FROM P1",
        ));
        assert!(matches!(bad_value, Err(EngineError::Validation(_))));

        let unknown_relation = engine.register_query(query(
            "QUERY q6 SUBSCRIBER s1 PATTERN Teleport(Car,Car) WINDOW COUNT 5 FROM P1",
        ));
        assert!(matches!(unknown_relation, Err(EngineError::Validation(_))));

        let widened_role = engine.register_query(query(
            "QUERY q7 SUBSCRIBER s1 PATTERN ParkingSlotFull(Person,Slot) WINDOW COUNT 5 FROM P1",
        ));
        assert!(matches!(widened_role, Err(EngineError::Validation(_))));

        let threshold_misuse = engine.register_query(query(
            "QUERY q8 SUBSCRIBER s1 PATTERN Overtake(Car,Car) THRESHOLD 0.5 WINDOW COUNT 5 FROM P1",
        ));
        assert!(matches!(threshold_misuse, Err(EngineError::Validation(_))));

        // Structurally empty query built directly (the parser already
        // refuses this shape).
        let empty = engine.register_query(Query {
            query_id: "q9".to_owned(),
            subscriber_id: "s1".to_owned(),
            object_specs: vec![],
            relation_spec: None,
            window: WindowSpec::CountTumbling { n: 5 },
            publishers: ["P1".to_owned()].into_iter().collect(),
        });
        assert!(matches!(empty, Err(EngineError::Validation(_))));

        let unknown_publisher = engine.ingest_frame("P9", &frame_record(0, 0, vec![]));
        assert!(matches!(
            unknown_publisher,
            Err(EngineError::UnknownPublisher(_))
        ));
        let dup_pub = engine.register_publisher("P1");
        assert!(matches!(dup_pub, Err(EngineError::DuplicatePublisher(_))));
    }

    #[test]
    fn overtake_scenario_fires_exactly_once_in_a_single_state() {
        let spec = ScenarioSpec::new(ScenarioKind::with_defaults("overtake").unwrap(), 7, 20);
        let (frames, gt) = generate_scenario(&spec).unwrap();
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY ov SUBSCRIBER s1 PATTERN Overtake(Car,Bike) WINDOW COUNT 20 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        for record in &frames {
            engine.ingest_frame("P1", record).unwrap();
        }
        let records = sink.records();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].match_kind, MatchKind::Pattern);
        let matches = records[0].bindings.as_array().unwrap();
        assert_eq!(matches.len(), 1, "one overtake in the scenario");
        let expected = &gt.events[0];
        assert_eq!(matches[0]["span"]["start_ms"], expected.span_ms.0);
        assert_eq!(matches[0]["span"]["end_ms"], expected.span_ms.1);
        assert_eq!(matches[0]["bound"]["overtaker"], 1);
    }

    #[test]
    fn sliding_windows_suppress_repeated_overtake_reports() {
        let spec = ScenarioSpec::new(ScenarioKind::with_defaults("overtake").unwrap(), 7, 20);
        let (frames, _) = generate_scenario(&spec).unwrap();
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        // Slide 1: the crossing pair of frames appears in five states.
        engine
            .register_query(query(
                "QUERY ov SUBSCRIBER s1 PATTERN Overtake(Car,Bike) WINDOW COUNT 5 SLIDE 1 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        for record in &frames {
            engine.ingest_frame("P1", record).unwrap();
        }
        let records = sink.records();
        assert_eq!(
            records.len(),
            1,
            "the same transition is reported only once across overlapping states"
        );
        assert_eq!(records[0].bindings.as_array().unwrap().len(), 1);
    }

    #[test]
    fn parking_scenario_reports_full_then_vacant_with_carry() {
        let spec =
            ScenarioSpec::new(ScenarioKind::with_defaults("parking_enter_exit").unwrap(), 3, 40);
        let (frames, gt) = generate_scenario(&spec).unwrap();
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY pk SUBSCRIBER s1 PATTERN ParkingSlotFull(Car,Slot) WINDOW COUNT 10 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        for record in &frames {
            engine.ingest_frame("P1", record).unwrap();
        }
        let records = sink.records();
        assert_eq!(records.len(), 1, "both transitions fall in one state");
        assert_eq!(records[0].match_kind, MatchKind::Occupancy);
        let events = records[0].bindings.as_array().unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0]["kind"], "slot_full");
        assert_eq!(events[0]["t_ms"], gt.events[0].span_ms.0);
        assert_eq!(events[1]["kind"], "slot_vacant");
        assert_eq!(events[1]["t_ms"], gt.events[1].span_ms.0);
        // Occupancy carried across the remaining empty states: no
        // re-announcement while the slot stays vacant.
        assert_eq!(engine.stats().states_emitted, 4);
    }

    #[test]
    fn combined_object_and_pattern_query_emits_two_records() {
        let spec = ScenarioSpec::new(ScenarioKind::with_defaults("overtake").unwrap(), 7, 20);
        let (frames, _) = generate_scenario(&spec).unwrap();
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY both SUBSCRIBER s1 OBJECT Car PATTERN Overtake(Car,Bike) WINDOW COUNT 20 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        for record in &frames {
            engine.ingest_frame("P1", record).unwrap();
        }
        let records = sink.records();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].match_kind, MatchKind::Objects);
        assert_eq!(records[1].match_kind, MatchKind::Pattern);
        assert_eq!(records[0].span_start_ms, records[1].span_start_ms);
    }

    #[test]
    fn subscriber_isolation_and_unsubscribe() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER alice OBJECT Car WINDOW COUNT 1 FROM P1",
            ))
            .unwrap();
        engine
            .register_query(query(
                "QUERY q2 SUBSCRIBER bob OBJECT Vehicle WINDOW COUNT 1 FROM P1",
            ))
            .unwrap();
        let alice = Arc::new(VecSink::new());
        let bob = Arc::new(VecSink::new());
        let alice_handle = engine.subscribe("alice", alice.clone());
        engine.subscribe("bob", bob.clone());

        engine
            .ingest_frame("P1", &frame_record(0, 0, vec![car(5.0, "white")]))
            .unwrap();
        assert_eq!(alice.records().len(), 1);
        assert_eq!(bob.records().len(), 1);
        assert_eq!(alice.records()[0].query_id, "q1");
        assert_eq!(bob.records()[0].query_id, "q2");

        assert!(engine.unsubscribe(alice_handle));
        assert!(!engine.unsubscribe(alice_handle), "handle is gone");
        engine
            .ingest_frame("P1", &frame_record(1, 33, vec![car(5.0, "white")]))
            .unwrap();
        assert_eq!(alice.records().len(), 1, "no further deliveries");
        assert_eq!(bob.records().len(), 2);
        // The query itself stayed registered: notifications still counted.
        assert_eq!(engine.stats().notifications, 4);
    }

    #[test]
    fn deregistered_query_stops_producing_states() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 2 FROM P1",
            ))
            .unwrap();
        engine
            .ingest_frame("P1", &frame_record(0, 0, vec![car(5.0, "white")]))
            .unwrap();
        engine.deregister_query("q1").unwrap();
        assert!(matches!(
            engine.deregister_query("q1"),
            Err(EngineError::UnknownQuery(_))
        ));
        engine
            .ingest_frame("P1", &frame_record(1, 33, vec![car(5.0, "white")]))
            .unwrap();
        assert_eq!(engine.stats().states_emitted, 0, "buffered partial dropped");
    }

    #[test]
    fn state_backend_logs_each_state_exactly_once() {
        let engine = Engine::new(
            default_traffic_schema(),
            EngineSettings {
                state_backend: true,
                ..EngineSettings::default()
            },
        );
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 5 FROM P1",
            ))
            .unwrap();
        for i in 0..12u64 {
            engine
                .ingest_frame("P1", &frame_record(i, i as i64 * 33, vec![car(5.0, "white")]))
                .unwrap();
        }
        let log = engine.state_log();
        assert_eq!(log.len(), 2);
        assert_eq!(log[0].seq, 0);
        assert_eq!(log[1].seq, 1);
        assert_eq!(log[0].frames, 5);
        assert_eq!(log[0].nodes, 5);
        assert_eq!(
            (log[0].span_start_ms, log[0].span_end_ms),
            (0, 132),
            "summary span matches the first complete window"
        );
    }

    #[test]
    fn flush_closes_partial_time_windows() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW TIME 1000 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        for i in 0..3u64 {
            engine
                .ingest_frame("P1", &frame_record(i, i as i64 * 33, vec![car(5.0, "white")]))
                .unwrap();
        }
        assert!(sink.records().is_empty(), "bucket not yet complete");
        let report = engine.flush();
        assert_eq!(report.states, 1);
        let records = sink.records();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].span_end_ms, 66);
        // Flushing again finds nothing buffered.
        assert_eq!(engine.flush().states, 0);
    }

    #[test]
    fn evaluator_errors_become_error_notifications_without_stopping_others() {
        use crate::rules::PatternScope;
        use crate::temporal::{AllenRelation, BoolExpr, IntervalRef, Leaf};

        // A window-scope rule with an interval leaf: over a one-frame
        // state the window span is instantaneous, which the interval
        // algebra rejects, so evaluation errors at runtime.
        let rule = PatternRule {
            name: "trailing".to_owned(),
            roles: vec![
                ("subject".to_owned(), "Vehicle".to_owned()),
                ("reference".to_owned(), "Vehicle".to_owned()),
            ],
            scope: PatternScope::Window,
            body: BoolExpr::leaf(Leaf::Allen {
                relation: AllenRelation::During,
                a: IntervalRef::TrackSpan("subject".to_owned()),
                b: IntervalRef::WindowSpan,
            }),
        };
        let mut schema = default_traffic_schema();
        let mut known = crate::rules::builtin_rule_names();
        known.insert("trailing".to_owned());
        schema
            .register_relation_class("Trailing", ("Vehicle", "Vehicle"), "trailing", &known)
            .unwrap();
        let mut registry = RuleRegistry::new();
        registry.register(rule).unwrap();
        let engine = Engine::with_registry(schema, registry, EngineSettings::default());
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(query(
                "QUERY bad SUBSCRIBER s1 PATTERN Trailing(Car,Car) WINDOW COUNT 1 FROM P1",
            ))
            .unwrap();
        engine
            .register_query(query(
                "QUERY good SUBSCRIBER s1 OBJECT Car WINDOW COUNT 1 FROM P1",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        engine
            .ingest_frame(
                "P1",
                &frame_record(0, 0, vec![car(5.0, "white"), car(50.0, "black")]),
            )
            .unwrap();
        let records = sink.records();
        assert_eq!(records.len(), 2);
        let error = records.iter().find(|r| r.query_id == "bad").unwrap();
        assert_eq!(error.match_kind, MatchKind::Error);
        assert!(error.bindings[0]["error"].as_str().unwrap().len() > 1);
        let good = records.iter().find(|r| r.query_id == "good").unwrap();
        assert_eq!(good.match_kind, MatchKind::Objects);
        assert_eq!(engine.stats().error_notifications, 1);
    }

    #[test]
    fn retain_streams_keeps_lane_history() {
        let engine = Engine::new(
            default_traffic_schema(),
            EngineSettings {
                retain_streams: true,
                ..EngineSettings::default()
            },
        );
        engine.register_publisher("P1").unwrap();
        for i in 0..3u64 {
            engine
                .ingest_frame("P1", &frame_record(i, i as i64 * 33, vec![car(5.0, "white")]))
                .unwrap();
        }
        let history = engine.lane_history("P1").unwrap();
        assert_eq!(history.len(), 3);
        assert_eq!(history[2].timestamp_ms, 66);
        let bare = engine.lane_history("P1").unwrap();
        assert_eq!(bare.len(), 3);
    }

    #[test]
    fn per_publisher_windows_are_independent() {
        let engine = engine();
        engine.register_publisher("P1").unwrap();
        engine.register_publisher("P2").unwrap();
        engine
            .register_query(query(
                "QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 2 FROM P1,P2",
            ))
            .unwrap();
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s1", sink.clone());
        // P1 gets two frames (closes a window); P2 only one (stays open).
        engine
            .ingest_frame("P1", &frame_record(0, 0, vec![car(5.0, "white")]))
            .unwrap();
        engine
            .ingest_frame("P2", &frame_record(0, 5, vec![car(7.0, "black")]))
            .unwrap();
        engine
            .ingest_frame("P1", &frame_record(1, 33, vec![car(5.0, "white")]))
            .unwrap();
        let records = sink.records();
        assert_eq!(records.len(), 1, "only P1's window closed");
        assert_eq!(records[0].span_end_ms, 33);
    }
}
