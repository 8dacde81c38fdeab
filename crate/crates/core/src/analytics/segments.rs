use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Segmentation};
use crate::readiness::FeatureSeries;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub mean: [f64; 3],
    pub max: [f64; 3],
    pub duration_blocks: usize,
}

/// Per-segment payload before it is stamped with a replica version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub segment_index: usize,
    pub block_range: (usize, usize),
    pub cluster_label: usize,
    pub stats: SegmentStats,
}

/// Most frequent label; ties go to the lowest label.
pub fn majority_label(labels: &[usize]) -> Option<usize> {
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let mut best: Option<(usize, usize)> = None;
    for (l, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((l, c));
        }
    }
    best.map(|(l, _)| l)
}

/// Per-axis mean and max, duration, and majority cluster label of every
/// segment.
pub fn segment_features(
    features: &FeatureSeries,
    segmentation: &Segmentation,
    labels: &[usize],
) -> Result<Vec<SegmentSummary>, AnalyticsError> {
    let n = features.len();
    if labels.len() != n {
        return Err(AnalyticsError::LengthMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if segmentation.n != n {
        return Err(AnalyticsError::LengthMismatch {
            expected: n,
            got: segmentation.n,
        });
    }
    Ok(segmentation
        .segments()
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let blocks = &features.blocks[r.clone()];
            let mut mean = [0.0; 3];
            let mut max = [f64::NEG_INFINITY; 3];
            for b in blocks {
                for d in 0..3 {
                    mean[d] += b.peaks[d];
                    max[d] = max[d].max(b.peaks[d]);
                }
            }
            for m in &mut mean {
                *m /= blocks.len() as f64;
            }
            SegmentSummary {
                segment_index: i,
                block_range: (r.start, r.end),
                cluster_label: majority_label(&labels[r.clone()]).expect("segments are non-empty"),
                stats: SegmentStats {
                    mean,
                    max,
                    duration_blocks: r.len(),
                },
            }
        })
        .collect())
}
