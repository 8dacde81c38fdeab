use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{HyperParams, OrchestratorError, StageError};
use crate::analytics::{
    pelt_segment, segment_features, silhouette_score, KMeans, PeltConfig, Segmentation,
};
use crate::archive::{ArchiveEntry, SegmentRecord};
use crate::readiness::{run_readiness, FeatureSeries, RawAxes, ReadinessConfig};

/// k-means restarts per replica; the lowest inertia wins.
pub const KMEANS_RESTARTS: usize = 10;

/// Minimum segment length in blocks.
const MIN_SEGMENT_BLOCKS: usize = 2;

/// `v<seq>-<8 hex digits>`, the digits being a SHA-256 prefix of the
/// hyperparameters' canonical JSON.
pub fn replica_version(seq: usize, hp: &HyperParams) -> String {
    let json = serde_json::to_vec(hp).expect("hyperparameters serialize");
    let digest = Sha256::digest(&json);
    let hex: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
    format!("v{seq}-{hex}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaContext {
    pub asset_id: String,
    pub seed: u64,
    /// 1-based position in the grid.
    pub seq: usize,
    pub rarity_threshold: f64,
}

/// Equality ignores `wall_time`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub replica_version: String,
    pub hyperparams: HyperParams,
    pub readiness: ReadinessConfig,
    pub seed: u64,
    pub n_blocks: usize,
    pub segmentation: Segmentation,
    /// Per-block k-means labels.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Silhouette of the blocks labelled by their segment's cluster.
    pub silhouette: f64,
    pub segment_count: usize,
    pub anomaly_count: usize,
    pub segments: Vec<SegmentRecord>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for ReplicaResult {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self, other);
        a.replica_version == b.replica_version
            && a.hyperparams == b.hyperparams
            && a.readiness == b.readiness
            && a.seed == b.seed
            && a.n_blocks == b.n_blocks
            && a.segmentation == b.segmentation
            && a.labels == b.labels
            && a.centroids == b.centroids
            && a.inertia == b.inertia
            && a.silhouette == b.silhouette
            && a.segment_count == b.segment_count
            && a.anomaly_count == b.anomaly_count
            && a.segments == b.segments
    }
}

impl ReplicaResult {
    /// Each block labelled with its segment's cluster.
    pub fn segment_labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_blocks];
        for s in &self.segments {
            out[s.block_range.0..s.block_range.1].fill(s.cluster_label);
        }
        out
    }
}

/// A finished replica plus the feature series it was computed from.
#[derive(Debug, Clone)]
pub struct ReplicaRun {
    pub result: ReplicaResult,
    pub features: FeatureSeries,
}

/// Readiness, change-point detection, clustering and scoring for one
/// hyperparameter set over a fixed window of archived samples.
pub fn run_replica(
    window: &[ArchiveEntry],
    hp: &HyperParams,
    ctx: &ReplicaContext,
) -> Result<ReplicaRun, OrchestratorError> {
    let version = replica_version(ctx.seq, hp);
    let started = Instant::now();
    let stage = |e: StageError| OrchestratorError::Stage {
        replica_version: version.clone(),
        source: e,
    };

    let config = hp.readiness_config();
    let raw = RawAxes::from_entries(window).map_err(|e| stage(e.into()))?;
    let features = run_readiness(&raw, &config).map_err(|e| stage(e.into()))?;
    let vectors = features.vectors();

    let pelt = PeltConfig::new(hp.penalty).with_min_segment(MIN_SEGMENT_BLOCKS);
    let segmentation = pelt_segment(&vectors, &pelt).map_err(|e| stage(e.into()))?;
    let model = KMeans::new(hp.k)
        .seed(ctx.seed)
        .n_init(KMEANS_RESTARTS)
        .fit(&vectors)
        .map_err(|e| stage(e.into()))?;
    let summaries =
        segment_features(&features, &segmentation, &model.labels).map_err(|e| stage(e.into()))?;

    let segments: Vec<SegmentRecord> = summaries
        .into_iter()
        .map(|s| SegmentRecord {
            asset_id: ctx.asset_id.clone(),
            replica_version: version.clone(),
            segment_index: s.segment_index,
            block_range: s.block_range,
            cluster_label: s.cluster_label,
            stats: s.stats,
            created_ts: features.blocks[s.block_range.0].time_range.0,
        })
        .collect();

    let mut result = ReplicaResult {
        replica_version: version.clone(),
        hyperparams: hp.clone(),
        readiness: config,
        seed: ctx.seed,
        n_blocks: features.len(),
        segment_count: segmentation.segment_count(),
        segmentation,
        labels: model.labels,
        centroids: model.centroids,
        inertia: model.inertia,
        silhouette: 0.0,
        anomaly_count: 0,
        segments,
        wall_time: Duration::ZERO,
    };
    let seg_labels = result.segment_labels();
    result.silhouette = silhouette_score(&vectors, &seg_labels).map_err(|e| stage(e.into()))?;
    result.anomaly_count = super::flag_anomalies(&result.segments, ctx.rarity_threshold)?.len();
    result.wall_time = started.elapsed();
    Ok(ReplicaRun { result, features })
}
