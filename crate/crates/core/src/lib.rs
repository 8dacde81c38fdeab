//! Digital twin runtime with a zero-configuration analytics pipeline.
//!
//! The crate is organised the way data flows through a deployment:
//!
//! - [`physical`]: telemetry samples, the line-delimited wire format, topic
//!   naming, trace replay and a deterministic production-line simulator.
//! - [`twin`]: lifecycle state machine and shadowed state of machine twins.
//! - [`archive`]: append-only, tag-aware time-series store plus segment
//!   statistics written by pipeline replicas.
//! - [`readiness`]: outlier removal, gap filling, smoothing, normalisation and
//!   block-wise peak extraction.
//! - [`analytics`]: PELT change points, seeded k-means and silhouette scoring.
//! - [`orchestrator`]: replica grids, benchmarking, rare-cluster anomaly
//!   flagging and the end-to-end zero-configuration run.

pub mod analytics;
pub mod archive;
pub mod orchestrator;
pub mod physical;
pub mod readiness;
pub mod twin;

/// Nanoseconds since the Unix epoch.
pub type Nanos = i64;

pub const NANOS_PER_SECOND: i64 = 1_000_000_000;
