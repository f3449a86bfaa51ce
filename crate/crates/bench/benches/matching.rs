//! Micro-benchmarks for the hot paths: topology matrices, interval
//! classification, the overtake evaluator, and end-to-end frame ingest.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scenecep::default_traffic_schema;
use scenecep::engine::{parse_query, Engine, EngineSettings, VecSink};
use scenecep::graph::build_mekg;
use scenecep::rules::{eval_overtake, OvertakeConfig};
use scenecep::scenario::{generate_scenario, ScenarioKind, ScenarioSpec};
use scenecep::spatial::{de9im, Geometry, Rect};
use scenecep::temporal::{allen, Interval};
use scenecep::FrameGraph;

fn random_rect(rng: &mut ChaCha8Rng) -> Rect {
    let x = rng.random_range(0..=28) as f64;
    let y = rng.random_range(0..=28) as f64;
    let w = rng.random_range(1..=(32 - x as i64)) as f64;
    let h = rng.random_range(1..=(32 - y as i64)) as f64;
    Rect::new(x, y, w, h)
}

fn bench_de9im(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<(Geometry, Geometry)> = (0..1_000)
        .map(|_| {
            (
                Geometry::Rect(random_rect(&mut rng)),
                Geometry::Rect(random_rect(&mut rng)),
            )
        })
        .collect();
    c.bench_function("de9im_1k_rect_pairs", |b| {
        b.iter(|| {
            for (a, q) in &pairs {
                black_box(de9im(black_box(a), black_box(q)).unwrap());
            }
        })
    });
}

fn bench_allen(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<(Interval, Interval)> = (0..1_000)
        .map(|_| {
            let mut iv = || {
                let s = rng.random_range(0..100);
                let e = rng.random_range(s + 1..=101);
                Interval::new(s, e).unwrap()
            };
            (iv(), iv())
        })
        .collect();
    c.bench_function("allen_1k_interval_pairs", |b| {
        b.iter(|| {
            for (i1, i2) in &pairs {
                black_box(allen(black_box(i1), black_box(i2)));
            }
        })
    });
}

fn overtake_state(frames: u32) -> Vec<FrameGraph> {
    let spec = ScenarioSpec::random_overtake(11, frames);
    let (records, _) = generate_scenario(&spec).unwrap();
    let schema = default_traffic_schema();
    records
        .iter()
        .map(|r| build_mekg(&r.detections, &schema, r.t_ms, r.frame).unwrap())
        .collect()
}

fn bench_overtake(c: &mut Criterion) {
    let schema = default_traffic_schema();
    let state = overtake_state(50);
    let refs: Vec<&FrameGraph> = state.iter().collect();
    let config = OvertakeConfig::new("Car", "Bike");
    c.bench_function("eval_overtake_50_frame_state", |b| {
        b.iter(|| black_box(eval_overtake(black_box(&refs), &config, &schema).unwrap()))
    });
}

fn bench_ingest(c: &mut Criterion) {
    let spec = ScenarioSpec::new(
        ScenarioKind::MultiObjectNoise {
            objects: 10,
            drop_p: 0.0,
        },
        17,
        200,
    );
    let (records, _) = generate_scenario(&spec).unwrap();
    let build = || {
        let engine = Engine::new(default_traffic_schema(), EngineSettings::default());
        engine.register_publisher("P1").unwrap();
        engine
            .register_query(
                parse_query("QUERY q SUBSCRIBER b OBJECT Car WINDOW COUNT 5 FROM P1").unwrap(),
            )
            .unwrap();
        engine.subscribe("b", Arc::new(VecSink::new()));
        engine
    };
    c.bench_function("ingest_200_frames_10_objects", |b| {
        b.iter_batched(
            build,
            |engine| {
                for record in &records {
                    engine.ingest_frame("P1", black_box(record)).unwrap();
                }
                black_box(engine.stats())
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_de9im, bench_allen, bench_overtake, bench_ingest);
criterion_main!(benches);
