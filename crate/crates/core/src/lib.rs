//! # scenecep
//!
//! Complex-event processing over object-detection video streams.
//!
//! Detections arrive as per-frame records, are lifted into labelled
//! scene graphs against a class ontology, buffered into windows, and
//! matched against subscriber queries — plain object/attribute filters
//! or spatiotemporal patterns such as an overtake manoeuvre or a parking
//! slot filling up. Matching is built from a small, composable calculus:
//!
//! * [`spatial`] — axis-aligned geometry, the 3×3 intersection-matrix
//!   topology predicates, relative directions, and boolean/metric
//!   spatial functions;
//! * [`temporal`] — interval algebra over time spans and a boolean
//!   expression tree with quantifiers evaluated over frame runs;
//! * [`ontology`] — the class hierarchy, attribute domains, and relation
//!   classes that give stream labels their meaning;
//! * [`graph`] — per-frame scene graphs and class/attribute selection
//!   with semantic enrichment;
//! * [`rules`] — pattern rules over tracked objects, including the
//!   built-in overtake and slot-occupancy evaluators;
//! * [`engine`] — publishers, windows, states, queries, subscribers,
//!   and the notification pipeline tying it all together;
//! * [`io`], [`track`], [`scenario`], [`metrics`], [`harness`] — the
//!   wire format, IoU track association, synthetic scenario generation
//!   with analytic ground truth, detection-quality scoring, and
//!   latency/throughput measurement.
//!
//! Everything is deterministic: identical inputs and configuration give
//! byte-identical notification logs (timing fields aside), regardless of
//! how frames interleave across publishers.

pub mod engine;
pub mod graph;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod ontology;
pub mod rules;
pub mod scenario;
pub mod spatial;
pub mod temporal;
pub mod track;

pub use engine::{Engine, EngineConfig, EngineError, EngineSettings, Query, WindowSpec};
pub use graph::{build_mekg, Detection, FrameGraph, GraphStream, ObjectNode};
pub use io::FrameRecord;
pub use ontology::{AttrDomain, AttrValue, OntologySchema};
pub use spatial::{Geometry, Rect};
pub use temporal::{Interval, TimeSpan};

use std::collections::BTreeMap;

use ontology::AttrDomain::{Enum, Range};

/// The stock traffic ontology used by the CLI, the synthetic scenarios,
/// and most tests: a small vehicle hierarchy, a parking slot class, and
/// the two built-in relation classes.
///
/// ```text
/// Vehicle ── Car   {color, type}
///        └── Bike  {color}
/// Person
/// Slot
/// Overtake(Vehicle, Vehicle)   -> overtake
/// ParkingSlotFull(Car, Slot)   -> parking
/// ```
pub fn default_traffic_schema() -> OntologySchema {
    let colors = || {
        Enum(
            ["white", "black", "red", "blue"]
                .into_iter()
                .map(str::to_owned)
                .collect(),
        )
    };
    let mut schema = OntologySchema::new();
    schema
        .register_class("Vehicle", None, BTreeMap::new())
        .expect("stock schema is well-formed");
    let mut car_attrs = BTreeMap::new();
    car_attrs.insert("color".to_owned(), colors());
    car_attrs.insert(
        "type".to_owned(),
        Enum(
            ["sedan", "suv", "van"]
                .into_iter()
                .map(str::to_owned)
                .collect(),
        ),
    );
    car_attrs.insert("speed".to_owned(), Range { min: 0.0, max: 400.0 });
    schema
        .register_class("Car", Some("Vehicle"), car_attrs)
        .expect("stock schema is well-formed");
    let mut bike_attrs = BTreeMap::new();
    bike_attrs.insert("color".to_owned(), colors());
    schema
        .register_class("Bike", Some("Vehicle"), bike_attrs)
        .expect("stock schema is well-formed");
    schema
        .register_class("Person", None, BTreeMap::new())
        .expect("stock schema is well-formed");
    schema
        .register_class("Slot", None, BTreeMap::new())
        .expect("stock schema is well-formed");

    let rules = rules::builtin_rule_names();
    schema
        .register_relation_class("Overtake", ("Vehicle", "Vehicle"), "overtake", &rules)
        .expect("stock schema is well-formed");
    schema
        .register_relation_class("ParkingSlotFull", ("Car", "Slot"), "parking", &rules)
        .expect("stock schema is well-formed");

    for class in ["Car", "Bike", "Person", "Slot"] {
        schema.mark_detectable(class).expect("classes just registered");
    }
    schema
        .mark_extractable("Car", "color")
        .expect("attribute just registered");
    schema
        .mark_extractable("Car", "type")
        .expect("attribute just registered");
    schema
        .mark_extractable("Bike", "color")
        .expect("attribute just registered");
    schema.validate().expect("stock schema is well-formed");
    schema
}
