//! `umn`: ingest transit datasets into an urban multiplex network, compute
//! metric snapshots, run percolation experiments and serve the HTTP API.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 runtime error.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use umn_core::ingest::{self, FloodMask, IngestReport};
use umn_core::metrics::compute_snapshot;
use umn_core::percolation::{percolate, points_csv};
use umn_core::{
    Dataset, MetricConfig, Mutation, Recompute, RemovalOrder, RemovalStrategy, ScenarioBase,
    ScenarioLog, WeightMode,
};
use umn_service::{AppState, ServiceConfig};

#[derive(Parser)]
#[command(
    name = "umn",
    version,
    about = "Urban multiplex network resilience toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network from zone polygons, line stops and OD flows.
    Ingest(IngestArgs),
    /// Compute a metric snapshot and the connectivity histogram.
    Metrics(MetricsArgs),
    /// Run a targeted edge-removal experiment.
    Percolate(PercolateArgs),
    /// Serve the HTTP API over a network.
    Serve(ServeArgs),
}

#[derive(Args)]
struct MetricOpts {
    /// Flow weighting: `count` uses raw layer weights, `share` the layer's share of the pair flow.
    #[arg(long, value_enum, default_value_t = Mode::Count, env = "UMN_WEIGHT_MODE")]
    weight_mode: Mode,
    /// Floor for the Heel-ness denominator.
    #[arg(long, default_value_t = 1e-6, env = "UMN_EPSILON")]
    epsilon: f64,
}

impl MetricOpts {
    fn config(&self) -> Result<MetricConfig, Failure> {
        let config = MetricConfig {
            weight_mode: self.weight_mode.into(),
            epsilon: self.epsilon,
        };
        config
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Count,
    Share,
}

impl From<Mode> for WeightMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Count => WeightMode::Count,
            Mode::Share => WeightMode::Share,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// GeoJSON FeatureCollection of zone polygons with an `id` property.
    #[arg(long)]
    zones: PathBuf,
    /// Line stops CSV: line_id,stop_id,seq,lon,lat.
    #[arg(long, conflicts_with = "gtfs", required_unless_present = "gtfs")]
    lines: Option<PathBuf>,
    /// GTFS directory (stops.txt, trips.txt, stop_times.txt) instead of --lines.
    #[arg(long)]
    gtfs: Option<PathBuf>,
    /// OD flows CSV: origin,destination,hour,count.
    #[arg(long)]
    flows: PathBuf,
    /// Flood mask: GeoJSON polygons or one zone id per line.
    #[arg(long)]
    flood: Option<PathBuf>,
    /// Hour window, e.g. `7-9` or `7,8,17-19`.
    #[arg(long, default_value = "0-23", value_parser = parse_hours)]
    hours: BTreeSet<u8>,
    #[arg(long, value_enum, default_value_t = Mode::Count)]
    weight_mode: Mode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Network JSON written by `ingest` (or a bare zones/layers/edges document).
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    metric: MetricOpts,
    /// Histogram bin count.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    bins: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Weak,
    Strong,
}

#[derive(Args)]
struct PercolateArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long, value_enum, default_value_t = Order::Weak)]
    order: Order,
    /// Re-rank edges after every removal (default).
    #[arg(long, conflicts_with = "static_ranking")]
    recompute: bool,
    /// Rank edges once, before any removal.
    #[arg(long = "static")]
    static_ranking: bool,
    /// Also write the curve resampled on this many evenly spaced fractions.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    grid: Option<u32>,
    #[command(flatten)]
    metric: MetricOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "UMN_NET")]
    net: PathBuf,
    /// Zone GeoJSON, for geometry responses and coordinate-based mutations.
    #[arg(long, env = "UMN_ZONES")]
    zones: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080", env = "UMN_LISTEN")]
    listen: SocketAddr,
    #[command(flatten)]
    metric: MetricOpts,
    /// Percolation on networks with more edges runs as a background job.
    #[arg(long, default_value_t = 5000, env = "UMN_ASYNC_THRESHOLD")]
    async_threshold: usize,
    /// Allowed CORS origin (any when unset).
    #[arg(long, env = "UMN_CORS_ORIGIN")]
    cors_origin: Option<String>,
}

fn parse_hours(s: &str) -> Result<BTreeSet<u8>, String> {
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let hour = |h: &str| -> Result<u8, String> {
            h.trim()
                .parse::<u8>()
                .ok()
                .filter(|h| *h < 24)
                .ok_or_else(|| format!("`{h}` is not an hour in 0-23"))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (hour(a)?, hour(b)?);
                if a > b {
                    return Err(format!("empty hour range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(hour(part)?);
            }
        }
    }
    if out.is_empty() {
        return Err("hour window is empty".into());
    }
    Ok(out)
}

enum Failure {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Runtime(m) => m,
        }
    }
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

/// Echoed into every artifact so a run can be reproduced from its outputs.
#[derive(Serialize)]
struct RunConfig {
    command: &'static str,
    version: &'static str,
    inputs: BTreeMap<&'static str, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hours: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_mode: Option<WeightMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<RemovalStrategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    out: String,
}

impl RunConfig {
    fn new(command: &'static str, out: &Path) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            inputs: BTreeMap::new(),
            hours: None,
            metrics: None,
            weight_mode: None,
            strategy: None,
            bins: None,
            grid: None,
            out: out.display().to_string(),
        }
    }

    fn input(mut self, name: &'static str, path: Option<&Path>) -> Self {
        if let Some(p) = path {
            self.inputs.insert(name, p.display().to_string());
        }
        self
    }
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::Runtime(format!("cannot write `{}`: {e}", path.display())))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, Failure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    write(dir, name, text)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("cannot create `{}`: {e}", dir.display())))
}

fn load_dataset(path: &Path) -> Result<Dataset, Failure> {
    Dataset::load(path).map_err(data)
}

fn run_ingest(args: IngestArgs) -> Result<(), Failure> {
    let zones = ingest::load_zones(&args.zones).map_err(data)?;
    let lines = match (&args.lines, &args.gtfs) {
        (Some(path), _) => ingest::load_lines(path),
        (None, Some(dir)) => ingest::load_gtfs(dir),
        (None, None) => {
            return Err(Failure::Usage(
                "one of --lines or --gtfs is required".into(),
            ))
        }
    }
    .map_err(data)?;
    let flows = ingest::load_flows(&args.flows).map_err(data)?;
    let mode: WeightMode = args.weight_mode.into();
    let (dataset, mut report) =
        ingest::build_umn(&zones, &lines, &flows, &args.hours, mode).map_err(data)?;

    let flood = match &args.flood {
        Some(path) => {
            let mask = ingest::load_flood_mask(path).map_err(data)?;
            let flooded = ingest::resolve_flood_mask(&mask, &zones).map_err(data)?;
            report.flooded_zones = Some(flooded.iter().cloned().collect());
            Some(flooded)
        }
        None => None,
    };

    let mut run = RunConfig::new("ingest", &args.out)
        .input("zones", Some(&args.zones))
        .input("lines", args.lines.as_deref())
        .input("gtfs", args.gtfs.as_deref())
        .input("flows", Some(&args.flows))
        .input("flood", args.flood.as_deref());
    run.hours = Some(args.hours.iter().copied().collect());
    run.weight_mode = Some(mode);

    prepare_out(&args.out)?;
    let fingerprint = dataset.network.fingerprint();
    write(&args.out, "network.json", dataset.to_json() + "\n")?;
    write_json(
        &args.out,
        "report.json",
        &json!({ "run": &run, "fingerprint": &fingerprint, "report": &report }),
    )?;
    if let Some(zones) = flood {
        let log = ScenarioLog {
            base_fingerprint: fingerprint.clone(),
            mutations: vec![Mutation::Flood {
                mask: FloodMask::Zones(zones.iter().cloned().collect()),
            }],
        };
        let flooded = dataset.network.isolate_zones(&zones).map_err(data)?;
        write_json(
            &args.out,
            "flood.json",
            &json!({
                "run": &run,
                "fingerprint": &fingerprint,
                "flooded_zones": zones,
                "flooded_fingerprint": flooded.fingerprint(),
                "scenario": log,
            }),
        )?;
    }
    print_report(&report);
    Ok(())
}

fn print_report(r: &IngestReport) {
    println!(
        "zones: {}\nlines: {}\nstops: {} ({} assigned, {} unassigned)\nlayers: {} ({} empty)\nedges: {}",
        r.zones,
        r.lines,
        r.stops,
        r.assigned_stops,
        r.unassigned_stops.len(),
        r.layers,
        r.empty_layers.len(),
        r.edges
    );
    if let Some(f) = &r.flooded_zones {
        println!("flooded zones: {}", f.len());
    }
}

fn run_metrics(args: MetricsArgs) -> Result<(), Failure> {
    let config = args.metric.config()?;
    let dataset = load_dataset(&args.net)?;
    let snapshot = compute_snapshot(&dataset.network, config);
    let histogram = umn_core::MetricEngine::new(&dataset.network, config)
        .connectivity_distribution(args.bins as usize)
        .map_err(data)?;

    let mut run = RunConfig::new("metrics", &args.out).input("net", Some(&args.net));
    run.metrics = Some(config);
    run.bins = Some(args.bins as usize);

    prepare_out(&args.out)?;
    write_json(
        &args.out,
        "snapshot.json",
        &json!({ "run": &run, "snapshot": &snapshot }),
    )?;
    write(&args.out, "connectivity_histogram.csv", histogram.to_csv())?;
    write_json(
        &args.out,
        "run.json",
        &json!({
            "run": &run,
            "fingerprint": &snapshot.fingerprint,
            "artifacts": ["snapshot.json", "connectivity_histogram.csv"],
        }),
    )?;
    println!("pairs: {}", snapshot.pairs.len());
    match &snapshot.achilles_heel {
        Some(z) => println!("achilles heel: {z}"),
        None => println!("achilles heel: none"),
    }
    Ok(())
}

fn run_percolate(args: PercolateArgs) -> Result<(), Failure> {
    let config = args.metric.config()?;
    let dataset = load_dataset(&args.net)?;
    let order = match args.order {
        Order::Weak => RemovalOrder::WeakFirst,
        Order::Strong => RemovalOrder::StrongFirst,
    };
    let recompute = if args.static_ranking {
        Recompute::StaticRanking
    } else {
        Recompute::AfterEachRemoval
    };
    let strategy = RemovalStrategy { order, recompute };
    let curve = percolate(&dataset.network, strategy, config).map_err(data)?;

    let mut run = RunConfig::new("percolate", &args.out).input("net", Some(&args.net));
    run.metrics = Some(config);
    run.strategy = Some(strategy);
    run.grid = args.grid.map(|g| g as usize);

    let fingerprint = dataset.network.fingerprint();
    let thresholds = [0.03, 0.5];
    let onsets: Vec<_> = thresholds
        .iter()
        .map(|&t| json!({ "threshold": t, "fraction_removed": curve.first_disruption(t) }))
        .collect();

    prepare_out(&args.out)?;
    let mut artifacts = vec!["percolation.csv", "removal_log.json"];
    write(&args.out, "percolation.csv", curve.to_csv())?;
    write_json(
        &args.out,
        "removal_log.json",
        &json!({
            "run": &run,
            "fingerprint": &fingerprint,
            "zones": curve.zones,
            "edges": curve.edges,
            "removal_log": &curve.removal_log,
        }),
    )?;
    if let Some(n) = args.grid {
        write(
            &args.out,
            "percolation_grid.csv",
            points_csv(&curve.resampled(n as usize)),
        )?;
        artifacts.push("percolation_grid.csv");
    }
    write_json(
        &args.out,
        "run.json",
        &json!({ "run": &run, "fingerprint": &fingerprint, "first_disruption": onsets, "artifacts": artifacts }),
    )?;
    for t in thresholds {
        match curve.first_disruption(t) {
            Some(f) => println!("first_disruption({t}) = {f}"),
            None => println!("first_disruption({t}) = none"),
        }
    }
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<(), Failure> {
    let config = args.metric.config()?;
    let dataset = load_dataset(&args.net)?;
    let zones = match &args.zones {
        Some(p) => Some(ingest::load_zones(p).map_err(data)?),
        None => None,
    };
    let base = ScenarioBase::new(dataset, zones.as_deref());
    let state = AppState::new(
        base,
        ServiceConfig {
            metrics: config,
            async_edge_threshold: args.async_threshold,
            cors_origin: args.cors_origin,
        },
    );
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .map_err(|e| Failure::Runtime(format!("cannot bind {}: {e}", args.listen)))?;
        let addr = listener
            .local_addr()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        umn_service::serve(listener, state, shutdown)
            .await
            .map_err(|e| Failure::Runtime(e.to_string()))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => run_ingest(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Percolate(a) => run_percolate(a),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_hours;

    #[test]
    fn hour_windows() {
        assert_eq!(
            parse_hours("7-9").unwrap().into_iter().collect::<Vec<_>>(),
            vec![7, 8, 9]
        );
        assert_eq!(parse_hours("23, 0-1").unwrap().len(), 3);
        assert!(parse_hours("9-7").is_err());
        assert!(parse_hours("24").is_err());
        assert!(parse_hours("").is_err());
    }
}
