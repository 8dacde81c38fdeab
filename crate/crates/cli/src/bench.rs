use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use twinforge::analytics::{kmeans_assign, KMeansModel};
use twinforge::orchestrator::{default_grid, ZeroConf};
use twinforge::physical::{replay_trace, Quality, ReplaySpeed};
use twinforge::readiness::{run_readiness, RawAxes, ReadinessConfig};

use crate::run::{ingest, orchestrator_failure, RunReport};
use crate::{worker_threads, CmdResult, Failure};

/// Blocks per readiness call in the streaming loop.
const CHUNK_BLOCKS: usize = 20;

#[derive(Debug, clap::Args)]
pub struct Args {
    trace: PathBuf,
    /// Machine whose champion model is used when no report is given.
    #[arg(long, default_value = "drill-1")]
    machine: String,
    /// report.json to take the champion model from instead of training one.
    #[arg(long)]
    report: Option<PathBuf>,
    /// The trace is replayed until at least this many samples went through.
    #[arg(long, default_value_t = 100_000)]
    min_samples: usize,
}

struct Champion {
    model: KMeansModel,
    readiness: ReadinessConfig,
}

fn champion(args: &Args) -> Result<Champion, Failure> {
    let winner = match &args.report {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let report: RunReport = serde_json::from_str(&text).map_err(|e| {
                Failure::usage(format!("{}: malformed report: {e}", path.display()))
            })?;
            report
                .benchmark
                .results
                .into_iter()
                .next()
                .ok_or_else(|| Failure::no_data("report has no replicas"))?
        }
        None => {
            let (archive, _) = ingest(&args.trace)?;
            let outcome = ZeroConf::new()
                .grid(default_grid())
                .threads(worker_threads()?)
                .run(&archive, &args.machine, None)
                .map_err(orchestrator_failure)?;
            outcome
                .report
                .results
                .into_iter()
                .next()
                .expect("ranked report is non-empty")
        }
    };
    Ok(Champion {
        model: KMeansModel {
            k: winner.centroids.len(),
            centroids: winner.centroids,
            labels: Vec::new(),
            inertia: winner.inertia,
            seed: winner.seed,
            iterations_run: 0,
            inertia_history: Vec::new(),
        },
        readiness: winner.readiness,
    })
}

#[derive(Default)]
struct AxisBuffers {
    axes: [Vec<f64>; 3],
}

/// One pass over the trace; returns the number of samples read.
fn replay_pass(
    path: &Path,
    champion: &Champion,
    chunk: usize,
    assigned: &mut usize,
) -> Result<usize, Failure> {
    let reader = replay_trace(path, ReplaySpeed::Max).map_err(|e| Failure::usage(e.to_string()))?;
    let mut buffers: HashMap<String, AxisBuffers> = HashMap::new();
    let mut count = 0usize;
    for sample in reader {
        let sample = sample.map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        count += 1;
        let Some(axis) = sample.channel.axis() else {
            continue;
        };
        let value = if sample.quality == Quality::Missing {
            f64::NAN
        } else {
            sample.value
        };
        let buf = buffers.entry(sample.asset_id).or_default();
        buf.axes[axis].push(value);
        if buf.axes.iter().all(|a| a.len() >= chunk) {
            let [x, y, z] = std::mem::take(&mut buf.axes);
            let raw = RawAxes::from_values(x, y, z);
            // All-missing chunks are skipped rather than aborting the run.
            if let Ok(features) = run_readiness(&raw, &champion.readiness) {
                for block in &features.blocks {
                    kmeans_assign(&champion.model, &block.peaks)
                        .map_err(|e| Failure::pipeline(e.to_string()))?;
                    *assigned += 1;
                }
            }
        }
    }
    Ok(count)
}

pub fn execute(args: Args) -> CmdResult {
    let champion = champion(&args)?;
    let chunk = champion.readiness.block_size * CHUNK_BLOCKS;
    let mut assigned = 0usize;
    let mut total = 0usize;
    let started = Instant::now();
    loop {
        let n = replay_pass(&args.trace, &champion, chunk, &mut assigned)?;
        if n == 0 {
            return Err(Failure::no_data(format!(
                "{}: empty trace",
                args.trace.display()
            )));
        }
        total += n;
        if total >= args.min_samples {
            break;
        }
    }
    let secs = started.elapsed().as_secs_f64().max(1e-9);
    eprintln!("{total} samples, {assigned} blocks assigned in {secs:.3} s");
    println!("{} samples/s", (total as f64 / secs) as u64);
    Ok(())
}
