use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::archive::SegmentRecord;
use crate::Nanos;

pub const DEFAULT_RARITY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub machine: String,
    pub replica_version: String,
    pub segment_index: usize,
    pub block_range: (usize, usize),
    pub cluster_label: usize,
    /// Share of all blocks that belong to the segment's cluster.
    pub rarity: f64,
    pub ts: Nanos,
}

/// Flags every segment whose cluster covers less than `threshold` of the
/// blocks. All records must come from one replica version.
pub fn flag_anomalies(
    records: &[SegmentRecord],
    threshold: f64,
) -> Result<Vec<AnomalyEvent>, OrchestratorError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(OrchestratorError::InvalidThreshold(threshold));
    }
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    if let Some(other) = records
        .iter()
        .find(|r| r.replica_version != first.replica_version)
    {
        return Err(OrchestratorError::MixedVersions(
            first.replica_version.clone(),
            other.replica_version.clone(),
        ));
    }
    let mut blocks_per_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0usize;
    for r in records {
        let len = r.block_range.1 - r.block_range.0;
        *blocks_per_cluster.entry(r.cluster_label).or_default() += len;
        total += len;
    }
    if total == 0 {
        return Ok(Vec::new());
    }
    Ok(records
        .iter()
        .filter_map(|r| {
            let rarity = blocks_per_cluster[&r.cluster_label] as f64 / total as f64;
            (rarity < threshold).then(|| AnomalyEvent {
                machine: r.asset_id.clone(),
                replica_version: r.replica_version.clone(),
                segment_index: r.segment_index,
                block_range: r.block_range,
                cluster_label: r.cluster_label,
                rarity,
                ts: r.created_ts,
            })
        })
        .collect())
}
