use std::fs;
use std::path::Path;

use crate::run::RunReport;
use crate::{CmdResult, Failure};

pub fn execute(path: &Path) -> CmdResult {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: malformed report: {e}", path.display())))?;
    print!("{}", render(&report));
    Ok(())
}

fn render(report: &RunReport) -> String {
    let results = &report.benchmark.results;
    if results.is_empty() {
        return "no replicas\n".to_owned();
    }
    let mut out = format!(
        "  {:<14} {:>8} {:>3} {:>5} {:>10} {:>8} {:>9}\n",
        "version", "penalty", "k", "block", "silhouette", "segments", "anomalies"
    );
    for r in results {
        let mark = if r.replica_version == report.benchmark.selected {
            '*'
        } else {
            ' '
        };
        out.push_str(&format!(
            "{mark} {:<14} {:>8} {:>3} {:>5} {:>10.4} {:>8} {:>9}\n",
            r.replica_version,
            r.hyperparams.penalty,
            r.hyperparams.k,
            r.hyperparams.block_size,
            r.silhouette,
            r.segment_count,
            r.anomaly_count
        ));
    }
    out
}
