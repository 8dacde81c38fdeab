use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twinforge::archive::{Archive, Tags};
use twinforge::orchestrator::{
    default_grid, parse_grid, BenchmarkReport, OrchestratorError, ParamGrid, ZeroConf,
    DEFAULT_RARITY_THRESHOLD, DEFAULT_SEED,
};
use twinforge::physical::{replay_trace, PhysicalError, ReplaySpeed};
use twinforge::twin::{LifecycleEvent, TwinRegistry};
use twinforge::Nanos;

use crate::simulate::write_json;
use crate::{worker_threads, CmdResult, Failure};

pub const REPORT_FILE: &str = "report.json";
pub const TIMELINE_FILE: &str = "timeline.csv";
pub const CHANGEPOINTS_FILE: &str = "changepoints.txt";
pub const ANOMALIES_FILE: &str = "anomalies.json";
pub const TWIN_FILE: &str = "twin.json";
pub const MANIFEST_FILE: &str = "manifest.json";

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Trace in JSON-lines telemetry format.
    trace: PathBuf,
    #[arg(long, default_value = "drill-1")]
    machine: String,
    #[arg(long, default_value = "twinforge-out")]
    out: PathBuf,
    /// Grid override as JSON, e.g. '{"penalty":[10,40],"k":[3,4]}'.
    #[arg(long)]
    grid: Option<String>,
    /// Rarity threshold for anomaly flagging.
    #[arg(long, default_value_t = DEFAULT_RARITY_THRESHOLD)]
    threshold: f64,
    /// Seed for clustering initialisation.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(default)]
    pub format_version: u32,
    #[serde(default)]
    pub machine: String,
    #[serde(default)]
    pub window: (Nanos, Nanos),
    #[serde(default)]
    pub samples_analysed: usize,
    #[serde(flatten)]
    pub benchmark: BenchmarkReport,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    format_version: u32,
    trace: &'a Path,
    machine: &'a str,
    out: &'a Path,
    seed: u64,
    threshold: f64,
    grid: &'a ParamGrid,
    artifacts: BTreeMap<&'static str, u32>,
}

/// Replays the trace into a fresh archive, shadowing every sample on a twin
/// per asset. Twins are bound and synchronized on their first sample.
pub fn ingest(trace: &Path) -> Result<(Archive, TwinRegistry), Failure> {
    let reader =
        replay_trace(trace, ReplaySpeed::Max).map_err(|e| Failure::usage(e.to_string()))?;
    let archive = Archive::new();
    let registry = TwinRegistry::new();
    let tags: Tags = BTreeMap::from([("source".to_owned(), "trace".to_owned())]);
    for sample in reader {
        let sample = sample
            .map_err(|e: PhysicalError| Failure::usage(format!("{}: {e}", trace.display())))?;
        let twin = match registry.get(&sample.asset_id) {
            Some(t) => t,
            None => {
                let t = registry
                    .create_twin(&sample.asset_id, BTreeMap::new())
                    .map_err(|e| Failure::usage(e.to_string()))?;
                t.apply_lifecycle_event(LifecycleEvent::Bind)
                    .and_then(|_| t.apply_lifecycle_event(LifecycleEvent::SyncEstablished))
                    .map_err(|e| Failure::pipeline(e.to_string()))?;
                t
            }
        };
        twin.shadow_sample(&sample)
            .map_err(|e| Failure::pipeline(e.to_string()))?;
        archive.append_sample(sample, tags.clone());
    }
    Ok((archive, registry))
}

pub fn orchestrator_failure(e: OrchestratorError) -> Failure {
    match e {
        OrchestratorError::NoData(_) => Failure::no_data(e.to_string()),
        OrchestratorError::EmptyGrid
        | OrchestratorError::UnknownParameter(_)
        | OrchestratorError::InvalidValue { .. }
        | OrchestratorError::InvalidThreshold(_) => Failure::usage(e.to_string()),
        _ => Failure::pipeline(e.to_string()),
    }
}

pub fn execute(args: Args) -> CmdResult {
    let grid = match &args.grid {
        Some(json) => parse_grid(json).map_err(orchestrator_failure)?,
        None => default_grid(),
    };
    let threads = worker_threads()?;
    let (archive, registry) = ingest(&args.trace)?;

    let mut zc = ZeroConf::new()
        .grid(grid.clone())
        .seed(args.seed)
        .rarity_threshold(args.threshold)
        .threads(threads);
    if let Some(twin) = registry.get(&args.machine) {
        zc = zc.twin(twin);
    }
    let outcome = zc
        .run(&archive, &args.machine, None)
        .map_err(orchestrator_failure)?;

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.out.display())))?;
    let write = |name: &str, text: String| {
        let path = args.out.join(name);
        fs::write(&path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    };
    let report = RunReport {
        format_version: FORMAT_VERSION,
        machine: outcome.machine.clone(),
        window: outcome.window,
        samples_analysed: outcome.samples_analysed,
        benchmark: outcome.report,
    };
    write_json(&args.out.join(REPORT_FILE), &report)?;
    write(TIMELINE_FILE, outcome.timeline.to_csv())?;
    write(CHANGEPOINTS_FILE, outcome.timeline.change_points_text())?;
    write_json(&args.out.join(ANOMALIES_FILE), &outcome.anomalies)?;
    if let Some(twin) = registry.get(&args.machine) {
        write_json(&args.out.join(TWIN_FILE), &twin.snapshot())?;
    }
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        trace: &args.trace,
        machine: &args.machine,
        out: &args.out,
        seed: args.seed,
        threshold: args.threshold,
        grid: &grid,
        artifacts: [
            REPORT_FILE,
            TIMELINE_FILE,
            CHANGEPOINTS_FILE,
            ANOMALIES_FILE,
            TWIN_FILE,
        ]
        .into_iter()
        .map(|a| (a, FORMAT_VERSION))
        .collect(),
    };
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;

    let winner = report.benchmark.winner();
    eprintln!(
        "selected {} ({} segments, silhouette {:.4}); {} anomalies",
        winner.replica_version,
        winner.segment_count,
        winner.silhouette,
        outcome.anomalies.len()
    );
    Ok(())
}
