use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use twinforge::physical::{encode_sample, simulate_scenario, ScenarioSpec};

use crate::{CmdResult, Failure};

pub const TRACE_FILE: &str = "trace.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const SCENARIO_FILE: &str = "scenario.json";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Scenario JSON file; overrides --seed and --duration.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Seconds of simulated time.
    #[arg(long, default_value_t = 120.0)]
    duration: f64,
    #[arg(long, default_value = "twinforge-out")]
    out: PathBuf,
}

fn load_spec(path: &Path) -> Result<ScenarioSpec, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: invalid scenario: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::pipeline(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn execute(args: Args) -> CmdResult {
    let spec = match &args.spec {
        Some(path) => load_spec(path)?,
        None => ScenarioSpec::microfactory(args.seed, args.duration),
    };
    let (stream, truth) =
        simulate_scenario(&spec).map_err(|e| Failure::usage(format!("invalid scenario: {e}")))?;

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.out.display())))?;
    let trace_path = args.out.join(TRACE_FILE);
    let io_err = |e: std::io::Error| Failure::usage(format!("{}: {e}", trace_path.display()));
    let mut w = BufWriter::new(File::create(&trace_path).map_err(io_err)?);
    let mut count = 0usize;
    for sample in stream {
        w.write_all(encode_sample(&sample).as_bytes())
            .map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
        count += 1;
    }
    w.flush().map_err(io_err)?;

    write_json(&args.out.join(GROUND_TRUTH_FILE), &truth)?;
    write_json(&args.out.join(SCENARIO_FILE), &spec)?;
    eprintln!("wrote {count} samples to {}", trace_path.display());
    Ok(())
}
