//! Replica orchestration: hyperparameter grids, versioned pipeline runs,
//! benchmarking, rare-cluster anomaly flagging and the zero-configuration
//! end-to-end run.

mod anomaly;
mod augment;
mod grid;
mod rank;
mod replica;
mod timeline;
mod zeroconf;

pub use anomaly::{flag_anomalies, AnomalyEvent, DEFAULT_RARITY_THRESHOLD};
pub use augment::{emit_augmentation_event, AugmentationOutcome};
pub use grid::{
    default_grid, parse_grid, spawn_replica_grid, HyperParams, ParamGrid, ReadinessOverrides,
};
pub use rank::{rank_replicas, BenchmarkReport, RANKING_RULE};
pub use replica::{
    replica_version, run_replica, ReplicaContext, ReplicaResult, ReplicaRun, KMEANS_RESTARTS,
};
pub use timeline::{build_timeline, Timeline, TimelineRow, TIMELINE_HEADER};
pub use zeroconf::{zeroconf_run, ZeroConf, ZeroConfOutcome, DEFAULT_SEED};

use thiserror::Error;

use crate::analytics::AnalyticsError;
use crate::archive::ArchiveError;
use crate::readiness::ReadinessError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error(transparent)]
    Readiness(#[from] ReadinessError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("grid is empty or has a parameter without values")]
    EmptyGrid,
    #[error("unknown grid parameter {0:?}")]
    UnknownParameter(String),
    #[error("invalid value {value} for parameter {param}")]
    InvalidValue { param: String, value: String },
    #[error("replica {replica_version}: {source}")]
    Stage {
        replica_version: String,
        source: StageError,
    },
    #[error("no replica results to rank")]
    NoResults,
    #[error("segment records mix replica versions {0:?} and {1:?}")]
    MixedVersions(String, String),
    #[error("expected {expected} blocks, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no data for machine {0:?} in the requested range")]
    NoData(String),
    #[error("rarity threshold {0} must be in [0, 1]")]
    InvalidThreshold(f64),
    #[error("worker pool: {0}")]
    WorkerPool(String),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}
