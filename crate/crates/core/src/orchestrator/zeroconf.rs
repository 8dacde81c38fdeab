use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_timeline, default_grid, emit_augmentation_event, flag_anomalies, rank_replicas,
    run_replica, spawn_replica_grid, AnomalyEvent, AugmentationOutcome, BenchmarkReport,
    OrchestratorError, ParamGrid, ReplicaContext, ReplicaRun, Timeline, DEFAULT_RARITY_THRESHOLD,
};
use crate::archive::{Archive, ArchiveError, WindowQuery};
use crate::physical::Channel;
use crate::twin::Twin;
use crate::Nanos;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroConfOutcome {
    pub machine: String,
    /// Half-open source-time window that was analysed.
    pub window: (Nanos, Nanos),
    pub samples_analysed: usize,
    pub report: BenchmarkReport,
    pub timeline: Timeline,
    pub anomalies: Vec<AnomalyEvent>,
    pub augmentation: Vec<AugmentationOutcome>,
}

/// End-to-end run over one machine's archived accelerometer data: every
/// grid replica runs in parallel, the best is selected, its segments are
/// recorded and rare-cluster segments are flagged.
#[derive(Debug, Clone)]
pub struct ZeroConf {
    grid: ParamGrid,
    seed: u64,
    rarity_threshold: f64,
    threads: Option<usize>,
    twin: Option<Arc<Twin>>,
}

impl Default for ZeroConf {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            seed: DEFAULT_SEED,
            rarity_threshold: DEFAULT_RARITY_THRESHOLD,
            threads: None,
            twin: None,
        }
    }
}

impl ZeroConf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grid(mut self, grid: ParamGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn rarity_threshold(mut self, threshold: f64) -> Self {
        self.rarity_threshold = threshold;
        self
    }

    /// Caps the number of worker threads. `None` uses all cores.
    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Twin that receives anomaly events.
    pub fn twin(mut self, twin: Arc<Twin>) -> Self {
        self.twin = Some(twin);
        self
    }

    pub fn run(
        &self,
        archive: &Archive,
        machine: &str,
        time_range: Option<(Nanos, Nanos)>,
    ) -> Result<ZeroConfOutcome, OrchestratorError> {
        if !(0.0..=1.0).contains(&self.rarity_threshold) {
            return Err(OrchestratorError::InvalidThreshold(self.rarity_threshold));
        }
        let configs = spawn_replica_grid(&self.grid)?;
        let no_data = || OrchestratorError::NoData(machine.to_owned());
        let window = match time_range {
            Some(r) => r,
            None => {
                let (lo, hi) = archive.time_bounds(machine).ok_or_else(no_data)?;
                (lo, hi + 1)
            }
        };
        let query = WindowQuery::new(machine, window.0, window.1).channels(Channel::ACCEL);
        let entries = match archive.query_window(&query) {
            Ok(e) => e,
            Err(ArchiveError::UnknownAsset(_)) => return Err(no_data()),
            Err(e) => return Err(e.into()),
        };
        if entries.is_empty() {
            return Err(no_data());
        }

        let run_all = || -> Vec<Result<ReplicaRun, OrchestratorError>> {
            configs
                .par_iter()
                .enumerate()
                .map(|(i, hp)| {
                    let ctx = ReplicaContext {
                        asset_id: machine.to_owned(),
                        seed: self.seed,
                        seq: i + 1,
                        rarity_threshold: self.rarity_threshold,
                    };
                    run_replica(&entries, hp, &ctx)
                })
                .collect()
        };
        let runs = match self.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| OrchestratorError::WorkerPool(e.to_string()))?
                .install(run_all),
            None => run_all(),
        };
        let runs: Vec<ReplicaRun> = runs.into_iter().collect::<Result<_, _>>()?;

        let mut features = Vec::with_capacity(runs.len());
        let mut results = Vec::with_capacity(runs.len());
        for run in runs {
            features.push((run.result.replica_version.clone(), run.features));
            results.push(run.result);
        }
        let report = rank_replicas(results)?;
        let winner = report.winner();
        let winner_features = &features
            .iter()
            .find(|(v, _)| *v == winner.replica_version)
            .expect("winner has features")
            .1;

        record_segments(archive, machine, winner)?;
        let anomalies = flag_anomalies(&winner.segments, self.rarity_threshold)?;
        let timeline = build_timeline(
            winner_features,
            &winner.segmentation,
            &winner.labels,
            &anomalies,
        )?;
        let augmentation = match &self.twin {
            Some(twin) => anomalies
                .iter()
                .map(|a| emit_augmentation_event(twin, a))
                .collect(),
            None => Vec::new(),
        };
        Ok(ZeroConfOutcome {
            machine: machine.to_owned(),
            window,
            samples_analysed: entries.len(),
            report,
            timeline,
            anomalies,
            augmentation,
        })
    }
}

/// Records the winner's segments unless an identical set is already stored.
fn record_segments(
    archive: &Archive,
    machine: &str,
    winner: &super::ReplicaResult,
) -> Result<(), OrchestratorError> {
    if let Ok(existing) = archive.segments(&winner.replica_version) {
        let mine: Vec<_> = existing
            .into_iter()
            .filter(|r| r.asset_id == machine)
            .collect();
        if mine == winner.segments {
            return Ok(());
        }
    }
    for r in &winner.segments {
        archive.record_segment_stats(r.clone())?;
    }
    Ok(())
}

/// Runs with the default settings and the given grid.
pub fn zeroconf_run(
    archive: &Archive,
    machine: &str,
    time_range: Option<(Nanos, Nanos)>,
    grid: &ParamGrid,
) -> Result<ZeroConfOutcome, OrchestratorError> {
    ZeroConf::new()
        .grid(grid.clone())
        .run(archive, machine, time_range)
}
