//! End-to-end engine behavior: replay determinism, lane and query
//! isolation, exactly-once state processing, agreement between the
//! dedicated overtake evaluator and its generic pattern-rule form, and
//! sanity of the measurement harnesses.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use scenecep::default_traffic_schema;
use scenecep::engine::{
    normalize_log, parse_query, Engine, EngineSettings, NotificationRecord, VecSink,
};
use scenecep::graph::{build_mekg, FrameGraph};
use scenecep::harness::{measure_throughput, merge_streams, CountingSink};
use scenecep::io::FrameRecord;
use scenecep::rules::{eval_overtake, eval_pattern, overtake_rule, OvertakeConfig};
use scenecep::scenario::{generate_scenario, ScenarioKind, ScenarioSpec};

fn stream_of(kind: &str, seed: u64, frames: u32) -> Vec<FrameRecord> {
    let kind = ScenarioKind::with_defaults(kind).expect("known scenario kind");
    generate_scenario(&ScenarioSpec::new(kind, seed, frames))
        .expect("valid spec")
        .0
}

fn noise_stream(seed: u64, frames: u32, objects: u32, drop_p: f64) -> Vec<FrameRecord> {
    let kind = ScenarioKind::MultiObjectNoise { objects, drop_p };
    generate_scenario(&ScenarioSpec::new(kind, seed, frames))
        .expect("valid spec")
        .0
}

/// Builds a fresh engine with the stock traffic schema, registers one
/// publisher per stream and every query, routes all subscribers into one
/// collecting sink, ingests the streams in (t_ms, publisher) order, and
/// flushes.
fn run_session(
    settings: EngineSettings,
    streams: &[(String, Vec<FrameRecord>)],
    queries: &[&str],
) -> (Engine, Vec<NotificationRecord>) {
    let engine = Engine::new(default_traffic_schema(), settings);
    for (publisher, _) in streams {
        engine.register_publisher(publisher).expect("fresh publisher id");
    }
    for line in queries {
        let query = parse_query(line).expect("well-formed query");
        engine.register_query(query).expect("query registers");
    }
    let sink = Arc::new(VecSink::new());
    for subscriber in engine.subscriber_ids() {
        engine.subscribe(&subscriber, sink.clone());
    }
    for (publisher, record) in merge_streams(streams) {
        engine.ingest_frame(publisher, record).expect("in-order ingest");
    }
    engine.flush();
    (engine, sink.records())
}

/// Normalized wire log per query id, for order-insensitive comparison
/// across runs that only differ in cross-lane interleaving.
fn per_query_logs(records: &[NotificationRecord]) -> BTreeMap<String, String> {
    let mut grouped: BTreeMap<String, Vec<NotificationRecord>> = BTreeMap::new();
    for record in records {
        grouped
            .entry(record.query_id.clone())
            .or_default()
            .push(record.clone());
    }
    grouped
        .into_iter()
        .map(|(query, records)| (query, normalize_log(&records)))
        .collect()
}

#[test]
fn replaying_identical_input_yields_identical_normalized_logs() {
    let streams = vec![
        ("P1".to_string(), stream_of("overtake", 7, 60)),
        ("P2".to_string(), stream_of("parking_enter_exit", 3, 80)),
    ];
    let queries = [
        "QUERY cars SUBSCRIBER alerts OBJECT Car WHERE color=white WINDOW COUNT 5 FROM P1",
        "QUERY ov SUBSCRIBER alerts PATTERN Overtake(Car,Bike) WINDOW COUNT 10 SLIDE 5 FROM P1",
        "QUERY park SUBSCRIBER ops PATTERN ParkingSlotFull(Car,Slot) THRESHOLD 0.5 WINDOW COUNT 8 FROM P2",
    ];
    let (_, first) = run_session(EngineSettings::default(), &streams, &queries);
    let (_, second) = run_session(EngineSettings::default(), &streams, &queries);

    let log = normalize_log(&first);
    assert!(!log.is_empty(), "the session must produce notifications");
    assert_eq!(
        log,
        normalize_log(&second),
        "identical input and config must replay to identical logs"
    );

    let seen: BTreeSet<&str> = first.iter().map(|r| r.query_id.as_str()).collect();
    for query in ["cars", "ov", "park"] {
        assert!(seen.contains(query), "query '{query}' produced no records");
    }
}

#[test]
fn per_query_results_are_invariant_to_cross_publisher_interleaving() {
    let overtake = stream_of("overtake", 11, 50);
    let noise = noise_stream(12, 50, 4, 0.1);
    let queries = [
        "QUERY ov SUBSCRIBER s PATTERN Overtake(Car,Bike) WINDOW COUNT 5 SLIDE 1 FROM P1",
        "QUERY count SUBSCRIBER s OBJECT Car WINDOW COUNT 4 FROM P2",
    ];
    let build = || {
        let engine = Engine::new(default_traffic_schema(), EngineSettings::default());
        engine.register_publisher("P1").unwrap();
        engine.register_publisher("P2").unwrap();
        for line in &queries {
            engine.register_query(parse_query(line).unwrap()).unwrap();
        }
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s", sink.clone());
        (engine, sink)
    };

    // Order A: global (t_ms, publisher) merge. Order B: all of P1, then
    // all of P2 — each lane still sees time strictly increasing.
    let streams = vec![
        ("P1".to_string(), overtake.clone()),
        ("P2".to_string(), noise.clone()),
    ];
    let (engine_a, sink_a) = build();
    for (publisher, record) in merge_streams(&streams) {
        engine_a.ingest_frame(publisher, record).unwrap();
    }
    engine_a.flush();

    let (engine_b, sink_b) = build();
    for record in &overtake {
        engine_b.ingest_frame("P1", record).unwrap();
    }
    for record in &noise {
        engine_b.ingest_frame("P2", record).unwrap();
    }
    engine_b.flush();

    let logs_a = per_query_logs(&sink_a.records());
    let logs_b = per_query_logs(&sink_b.records());
    assert_eq!(logs_a, logs_b, "per-lane results must not depend on interleaving");
    assert!(!logs_a["ov"].is_empty(), "the crossing must be reported");
    assert!(!logs_a["count"].is_empty(), "object states must be reported");
}

#[test]
fn query_results_are_unchanged_by_registering_another_query() {
    let streams = vec![("P1".to_string(), stream_of("overtake", 21, 40))];
    let watched =
        "QUERY ov SUBSCRIBER s PATTERN Overtake(Vehicle,Vehicle) WINDOW COUNT 8 SLIDE 2 FROM P1";
    let extra = "QUERY extra SUBSCRIBER t OBJECT Bike WINDOW COUNT 3 FROM P1";

    let (_, alone) = run_session(EngineSettings::default(), &streams, &[watched]);
    let (_, both) = run_session(EngineSettings::default(), &streams, &[watched, extra]);

    let alone_logs = per_query_logs(&alone);
    let both_logs = per_query_logs(&both);
    assert!(!alone_logs["ov"].is_empty(), "the crossing must be reported");
    assert_eq!(
        alone_logs["ov"], both_logs["ov"],
        "registering an unrelated query must not change existing results"
    );
    assert!(
        !both_logs["extra"].is_empty(),
        "the added query must see the Bike through the Vehicle hierarchy"
    );
}

#[test]
fn sliding_states_are_processed_exactly_once() {
    let settings = EngineSettings {
        state_backend: true,
        ..EngineSettings::default()
    };
    let streams = vec![("P1".to_string(), noise_stream(9, 20, 3, 0.0))];
    let query = "QUERY slide SUBSCRIBER s OBJECT Car WINDOW COUNT 4 SLIDE 2 FROM P1";
    let (engine, records) = run_session(settings, &streams, &[query]);

    // 20 frames, n = 4, slide = 2 → states starting at 0, 2, …, 16.
    let log = engine.state_log();
    assert_eq!(log.len(), 9, "(20 − 4)/2 + 1 complete windows");
    assert_eq!(engine.stats().states_emitted, 9);

    let period = 33; // round(1000 / 30 fps)
    for (i, state) in log.iter().enumerate() {
        assert_eq!(state.query_id, "slide");
        assert_eq!(state.publisher_id, "P1");
        assert_eq!(state.seq, i as u64, "states arrive in sequence order, none repeated");
        assert_eq!(state.frames, 4);
        assert_eq!(state.span_start_ms, 2 * i as i64 * period);
        assert_eq!(state.span_end_ms, (2 * i as i64 + 3) * period);
    }

    // Every state matched (three cars per frame, no drops), exactly once.
    let spans: Vec<(i64, i64)> = records
        .iter()
        .map(|r| (r.span_start_ms, r.span_end_ms))
        .collect();
    let distinct: BTreeSet<(i64, i64)> = spans.iter().copied().collect();
    assert_eq!(spans.len(), 9, "one notification per state");
    assert_eq!(distinct.len(), 9, "no state reported twice");
}

#[test]
fn the_pattern_rule_form_of_overtake_agrees_with_the_dedicated_evaluator() {
    let schema = default_traffic_schema();
    let config = OvertakeConfig::new("Car", "Bike");
    let rule = overtake_rule(&config);

    for seed in 0..24u64 {
        let expect_crossing = seed % 2 == 0;
        let spec = if expect_crossing {
            ScenarioSpec::random_overtake(seed, 36)
        } else {
            ScenarioSpec::random_follow(seed, 36)
        };
        let (records, _) = generate_scenario(&spec).unwrap();
        let graphs: Vec<FrameGraph> = records
            .iter()
            .map(|r| build_mekg(&r.detections, &schema, r.t_ms, r.frame).unwrap())
            .collect();
        let state: Vec<&FrameGraph> = graphs.iter().collect();

        let direct = eval_overtake(&state, &config, &schema).unwrap();
        let generic = eval_pattern(&rule, &state, &schema).unwrap();

        let expected = usize::from(expect_crossing);
        assert_eq!(direct.len(), expected, "seed {seed}: dedicated evaluator");
        assert_eq!(generic.len(), expected, "seed {seed}: pattern form");
        for (d, g) in direct.iter().zip(&generic) {
            assert_eq!(d.span, g.span, "seed {seed}: evidence spans differ");
            assert_eq!(
                d.bound.get("subject"),
                g.bound.get("subject"),
                "seed {seed}: subject binding differs"
            );
            assert_eq!(
                d.bound.get("reference"),
                g.bound.get("reference"),
                "seed {seed}: reference binding differs"
            );
        }
    }
}

#[test]
fn throughput_does_not_improve_when_frames_carry_more_objects() {
    let fps_for = |objects: u32| -> f64 {
        let mut runs = Vec::new();
        for rep in 0..5u64 {
            let engine = Arc::new(Engine::new(
                default_traffic_schema(),
                EngineSettings::default(),
            ));
            engine.register_publisher("P1").unwrap();
            engine
                .register_query(
                    parse_query("QUERY q SUBSCRIBER s OBJECT Car WINDOW COUNT 10 FROM P1")
                        .unwrap(),
                )
                .unwrap();
            engine.subscribe("s", Arc::new(CountingSink::new()));
            let frames = noise_stream(100 + rep, 1200, objects, 0.0);
            let point = measure_throughput(engine, vec![("P1".to_string(), frames)]).unwrap();
            assert_eq!(point.frames, 1200);
            runs.push(point.frames_per_sec);
        }
        runs.sort_by(f64::total_cmp);
        runs[2]
    };

    let light = fps_for(5);
    let heavy = fps_for(10);
    assert!(light > 0.0 && heavy > 0.0);
    assert!(
        heavy <= light * 1.15,
        "doubling per-frame objects must not speed the engine up: \
         {light:.0} frames/s at 5 objects vs {heavy:.0} at 10"
    );
}

#[test]
fn threaded_ingest_matches_single_threaded_results_per_query() {
    let streams = vec![
        ("P1".to_string(), stream_of("overtake", 31, 60)),
        ("P2".to_string(), stream_of("parking_enter_exit", 32, 60)),
        ("P3".to_string(), noise_stream(33, 60, 4, 0.0)),
    ];
    let queries = [
        "QUERY ov SUBSCRIBER s PATTERN Overtake(Car,Bike) WINDOW COUNT 6 SLIDE 3 FROM P1",
        "QUERY park SUBSCRIBER s PATTERN ParkingSlotFull(Car,Slot) WINDOW COUNT 6 FROM P2",
        "QUERY obj SUBSCRIBER s OBJECT Car WINDOW COUNT 5 FROM P3",
    ];

    let run_threaded = || {
        let engine = Arc::new(Engine::new(
            default_traffic_schema(),
            EngineSettings::default(),
        ));
        for (publisher, _) in &streams {
            engine.register_publisher(publisher).unwrap();
        }
        for line in &queries {
            engine.register_query(parse_query(line).unwrap()).unwrap();
        }
        let sink = Arc::new(VecSink::new());
        engine.subscribe("s", sink.clone());
        measure_throughput(engine, streams.clone()).unwrap();
        per_query_logs(&sink.records())
    };

    let (_, serial_records) = run_session(EngineSettings::default(), &streams, &queries);
    let serial = per_query_logs(&serial_records);
    let threaded_a = run_threaded();
    let threaded_b = run_threaded();

    assert_eq!(threaded_a, threaded_b, "threaded runs must agree with each other");
    assert_eq!(threaded_a, serial, "threading must not change per-query results");
    for (query, log) in &serial {
        assert!(!log.is_empty(), "query '{query}' produced no records");
    }
}
