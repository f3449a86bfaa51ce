//! `scenecep` — generate synthetic detection streams, run the matching
//! engine over them, and measure or score the results.
//!
//! Every subcommand prints machine-readable line-delimited records on
//! stdout and a human summary on stderr. Exit codes: 0 on success, 1 on
//! validation failures (malformed input, bad configuration, mismatched
//! data), 2 on runtime errors (I/O and the like).

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use scenecep::default_traffic_schema;
use scenecep::engine::{
    parse_query, Engine, EngineConfig, EngineError, NotificationSink, WriterSink,
};
use scenecep::harness::{measure_latency, measure_throughput, merge_streams, CountingSink};
use scenecep::io::{parse_frames, save_frames, FrameRecord};
use scenecep::metrics::{compute_f1, PredictedObject};
use scenecep::ontology::parse_schema;
use scenecep::rules::builtin_rule_names;
use scenecep::scenario::{
    generate_scenario, parse_ground_truth, save_ground_truth, ScenarioKind, ScenarioSpec,
};
use scenecep::spatial::Rect;

#[derive(Parser)]
#[command(
    name = "scenecep",
    version,
    about = "Complex-event processing over object-detection streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic detection stream with analytic ground truth.
    Gen(GenArgs),
    /// Run an engine config over its publishers' streams.
    Run(RunArgs),
    /// Measure matcher latency or multi-stream throughput.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Score an object-query notification log against ground truth.
    Score(ScoreArgs),
    /// Check a frame file: wire format, geometry, timestamp ordering.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Per-query matcher latency over repeated runs of a config.
    Latency(LatencyArgs),
    /// Aggregate frames/sec for each lane count in a sweep.
    Throughput(ThroughputArgs),
}

#[derive(Args)]
struct GenArgs {
    /// overtake | follow_no_overtake | parking_enter_exit | multi_object_noise
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    frames: u32,
    /// Frame file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the analytic ground truth here.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Stream id stamped on every record.
    #[arg(long, default_value = "P1")]
    stream: String,
}

#[derive(Args)]
struct RunArgs {
    /// Engine configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Notification log destination; stdout when omitted (and the config
    /// names none).
    #[arg(long)]
    notifications: Option<PathBuf>,
}

#[derive(Args)]
struct LatencyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of full passes over the streams; samples are pooled.
    #[arg(long, default_value_t = 3)]
    repeat: usize,
}

#[derive(Args)]
struct ThroughputArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated lane counts to sweep, e.g. 1,2,3,4. Each lane is a
    /// synthetic stream with one object query; the config contributes
    /// schema and engine settings only.
    #[arg(long, default_value = "1,2,3,4")]
    streams: String,
    /// Frames per lane.
    #[arg(long, default_value_t = 600)]
    frames: u32,
    /// Objects per frame in the synthetic streams.
    #[arg(long, default_value_t = 10)]
    objects: u32,
    #[arg(long, default_value_t = 40)]
    seed: u64,
}

#[derive(Args)]
struct ScoreArgs {
    /// Notification log produced by `run` (object-query records).
    #[arg(long)]
    notifications: PathBuf,
    /// Ground-truth file produced by `gen --gt`.
    #[arg(long)]
    gt: PathBuf,
    /// Frames per state — must match the query's tumbling window.
    #[arg(long)]
    window: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    frames: PathBuf,
}

/// A failure routed to its exit code.
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("validation failure: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Bench { which } => match which {
            BenchCommand::Latency(args) => cmd_bench_latency(args),
            BenchCommand::Throughput(args) => cmd_bench_throughput(args),
        },
        Command::Score(args) => cmd_score(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let kind = ScenarioKind::with_defaults(&args.scenario).map_err(validation)?;
    let spec = ScenarioSpec {
        kind,
        seed: args.seed,
        frames: args.frames,
        fps: args.fps,
        stream_id: args.stream.clone(),
    };
    let (frames, gt) = generate_scenario(&spec).map_err(validation)?;
    save_frames(&args.out, &frames).map_err(runtime)?;
    if let Some(path) = &args.gt {
        fs::write(path, save_ground_truth(&gt)).map_err(runtime)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "scenario": args.scenario,
            "seed": args.seed,
            "frames": frames.len(),
            "events": gt.events.len(),
            "out": args.out,
            "gt": args.gt,
        })
    );
    eprintln!(
        "generated {} frames of '{}' (seed {}) into {}{}",
        frames.len(),
        args.scenario,
        args.seed,
        args.out.display(),
        match &args.gt {
            Some(p) => format!(", ground truth into {}", p.display()),
            None => String::new(),
        }
    );
    Ok(())
}

/// Loads the schema a config names, or the stock traffic schema.
fn load_schema(config: &EngineConfig) -> Result<scenecep::OntologySchema, Failure> {
    match &config.schema {
        None => Ok(default_traffic_schema()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading schema {path}"))
                .map_err(runtime)?;
            parse_schema(&text, &builtin_rule_names()).map_err(validation)
        }
    }
}

/// Resolves one publisher source: a frame-file path, or
/// `synthetic:<kind>:<seed>:<frames>` for a generated stream carrying
/// the publisher's id.
fn load_source(source: &str, publisher_id: &str) -> Result<Vec<FrameRecord>, Failure> {
    match source.strip_prefix("synthetic:") {
        None => parse_frames(source)
            .map_err(|e| validation(anyhow!("frame file {source}: {e}"))),
        Some(rest) => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [kind, seed, frames] = parts.as_slice() else {
                return Err(validation(anyhow!(
                    "synthetic source must be synthetic:<kind>:<seed>:<frames>, got {source:?}"
                )));
            };
            let kind = ScenarioKind::with_defaults(kind).map_err(validation)?;
            let seed: u64 = seed
                .parse()
                .map_err(|_| validation(anyhow!("bad seed in {source:?}")))?;
            let frames: u32 = frames
                .parse()
                .map_err(|_| validation(anyhow!("bad frame count in {source:?}")))?;
            let mut spec = ScenarioSpec::new(kind, seed, frames);
            spec.stream_id = publisher_id.to_owned();
            let (records, _) = generate_scenario(&spec).map_err(validation)?;
            Ok(records)
        }
    }
}

/// Builds an engine from a config: schema, settings, publishers, queries.
fn build_engine(config: &EngineConfig) -> Result<Engine, Failure> {
    let schema = load_schema(config)?;
    let settings = config.settings().map_err(validation)?;
    let engine = Engine::new(schema, settings);
    for publisher in &config.publishers {
        engine.register_publisher(&publisher.id).map_err(validation)?;
    }
    for line in &config.queries {
        let query = parse_query(line).map_err(validation)?;
        engine.register_query(query).map_err(validation)?;
    }
    Ok(engine)
}

/// Loads every publisher's stream named in a config.
fn load_streams(config: &EngineConfig) -> Result<Vec<(String, Vec<FrameRecord>)>, Failure> {
    config
        .publishers
        .iter()
        .map(|p| Ok((p.id.clone(), load_source(&p.source, &p.id)?)))
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let config = EngineConfig::load(&args.config).map_err(validation)?;
    let engine = build_engine(&config)?;
    let streams = load_streams(&config)?;

    let log_path = args
        .notifications
        .clone()
        .or_else(|| config.notifications.clone().map(PathBuf::from));
    let sink: Arc<dyn NotificationSink> = match &log_path {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(runtime)?;
            Arc::new(WriterSink::new(file))
        }
        None => Arc::new(WriterSink::new(std::io::stdout())),
    };
    for subscriber in engine.subscriber_ids() {
        engine.subscribe(&subscriber, sink.clone());
    }

    for (publisher, record) in merge_streams(&streams) {
        engine.ingest_frame(publisher, record).map_err(validation)?;
    }
    engine.flush();

    let stats = engine.stats();
    eprintln!(
        "run complete: {} frames accepted, {} rejected, {} states, {} notifications ({} errors){}",
        stats.frames_accepted,
        stats.frames_rejected,
        stats.states_emitted,
        stats.notifications,
        stats.error_notifications,
        match &log_path {
            Some(p) => format!(", log at {}", p.display()),
            None => String::new(),
        }
    );
    Ok(())
}

fn cmd_bench_latency(args: LatencyArgs) -> Result<(), Failure> {
    if args.repeat == 0 {
        return Err(validation(anyhow!("--repeat must be at least 1")));
    }
    let mut config = EngineConfig::load(&args.config).map_err(validation)?;
    // Per-state sampling needs the state backend: every state then
    // contributes a latency, matched or not.
    config.state_backend = true;
    let streams = load_streams(&config)?;
    let stats = measure_latency(
        || {
            build_engine(&config).map_err(|f| match f {
                // The builder signature wants EngineError; configs that
                // fail here already failed validation on first load.
                Failure::Validation(e) | Failure::Runtime(e) => {
                    EngineError::Validation(format!("{e:#}"))
                }
            })
        },
        &streams,
        args.repeat,
    )
    .map_err(|e| validation(anyhow!(e.to_string())))?;
    for (query_id, s) in &stats {
        println!(
            "{}",
            serde_json::json!({
                "query_id": query_id,
                "count": s.count,
                "mean_us": s.mean_us,
                "p50_us": s.p50_us,
                "p99_us": s.p99_us,
                "max_us": s.max_us,
            })
        );
    }
    eprintln!(
        "latency over {} pass(es) of {} stream(s):",
        args.repeat,
        streams.len()
    );
    for (query_id, s) in &stats {
        eprintln!(
            "  {query_id}: n={} mean={:.1}µs p50={:.1}µs p99={:.1}µs max={:.1}µs",
            s.count, s.mean_us, s.p50_us, s.p99_us, s.max_us
        );
    }
    if stats.is_empty() {
        eprintln!("  (no queries registered — empty series)");
    }
    Ok(())
}

fn cmd_bench_throughput(args: ThroughputArgs) -> Result<(), Failure> {
    let lane_counts: Vec<usize> = args
        .streams
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| validation(anyhow!("bad lane count {s:?} in --streams")))
        })
        .collect::<Result<_, _>>()?;
    let config = EngineConfig::load(&args.config).map_err(validation)?;
    let settings = config.settings().map_err(validation)?;

    for &lanes in &lane_counts {
        let schema = load_schema(&config)?;
        let engine = Arc::new(Engine::new(schema, settings));
        let mut streams = Vec::with_capacity(lanes);
        for i in 0..lanes {
            let publisher = format!("S{}", i + 1);
            engine.register_publisher(&publisher).map_err(runtime)?;
            engine
                .register_query(
                    parse_query(&format!(
                        "QUERY thr{i} SUBSCRIBER bench OBJECT Car WINDOW COUNT 5 FROM {publisher}"
                    ))
                    .map_err(runtime)?,
                )
                .map_err(runtime)?;
            let mut spec = ScenarioSpec::new(
                ScenarioKind::MultiObjectNoise {
                    objects: args.objects,
                    drop_p: 0.0,
                },
                args.seed + i as u64,
                args.frames,
            );
            spec.stream_id = publisher.clone();
            let (records, _) = generate_scenario(&spec).map_err(validation)?;
            streams.push((publisher, records));
        }
        engine.subscribe("bench", Arc::new(CountingSink::new()));
        let point = measure_throughput(engine, streams)
            .map_err(|e| runtime(anyhow!(e.to_string())))?;
        println!(
            "{}",
            serde_json::to_string(&point).expect("throughput point serializes")
        );
        eprintln!(
            "  k={}: {} frames in {:.3}s → {:.0} frames/sec",
            point.streams, point.frames, point.elapsed_s, point.frames_per_sec
        );
    }
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<(), Failure> {
    if args.window == 0 {
        return Err(validation(anyhow!("--window must be at least 1")));
    }
    let log_text = fs::read_to_string(&args.notifications)
        .with_context(|| format!("reading {}", args.notifications.display()))
        .map_err(runtime)?;
    let records = scenecep::engine::parse_log(&log_text).map_err(validation)?;
    let gt_text = fs::read_to_string(&args.gt)
        .with_context(|| format!("reading {}", args.gt.display()))
        .map_err(runtime)?;
    let gt = parse_ground_truth(&gt_text).map_err(validation)?;

    // Pull per-frame predicted objects out of object-query records,
    // deduplicating hits that overlapping states repeated.
    #[derive(serde::Deserialize)]
    struct HitWire {
        t_ms: i64,
        class: String,
        bbox: Rect,
    }
    let mut seen: std::collections::BTreeSet<(i64, String, [u64; 4])> =
        std::collections::BTreeSet::new();
    let mut predictions: BTreeMap<i64, Vec<PredictedObject>> = BTreeMap::new();
    for record in records {
        if record.match_kind != scenecep::engine::MatchKind::Objects {
            continue;
        }
        let hits: Vec<HitWire> = serde_json::from_value(record.bindings).map_err(validation)?;
        for hit in hits {
            let key = (
                hit.t_ms,
                hit.class.clone(),
                [
                    hit.bbox.x.to_bits(),
                    hit.bbox.y.to_bits(),
                    hit.bbox.w.to_bits(),
                    hit.bbox.h.to_bits(),
                ],
            );
            if !seen.insert(key) {
                continue;
            }
            predictions.entry(hit.t_ms).or_default().push(PredictedObject {
                class: hit.class,
                bbox: hit.bbox,
            });
        }
    }

    let scores = compute_f1(&predictions, &gt, args.window)
        .map_err(|e| validation(anyhow!(e.to_string())))?;
    for score in &scores {
        println!(
            "{}",
            serde_json::to_string(score).expect("state score serializes")
        );
    }
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().map(|s| s.mean_f1).sum::<f64>() / scores.len() as f64
    };
    eprintln!(
        "scored {} states (window {}): mean F1 {:.4}",
        scores.len(),
        args.window,
        mean
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let frames = parse_frames(&args.frames)
        .map_err(|e| validation(anyhow!("{}: {e}", args.frames.display())))?;
    let detections: usize = frames.iter().map(|f| f.detections.len()).sum();
    println!(
        "{}",
        serde_json::json!({
            "frames": frames.len(),
            "detections": detections,
            "t_first_ms": frames.first().map(|f| f.t_ms),
            "t_last_ms": frames.last().map(|f| f.t_ms),
        })
    );
    eprintln!(
        "{}: {} frames, {} detections, ordering and geometry valid",
        args.frames.display(),
        frames.len(),
        detections
    );
    Ok(())
}
