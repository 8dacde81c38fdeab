use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AnomalyEvent, OrchestratorError};
use crate::analytics::{majority_label, Segmentation};
use crate::readiness::FeatureSeries;
use crate::Nanos;

pub const TIMELINE_HEADER: &str = "block_start,block_end,cluster,is_anomaly";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub block_start: usize,
    pub block_end: usize,
    pub cluster: usize,
    pub is_anomaly: bool,
    pub time_range: (Nanos, Nanos),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub n_blocks: usize,
    pub rows: Vec<TimelineRow>,
    pub change_points: Vec<usize>,
}

impl Timeline {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TIMELINE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.block_start, r.block_end, r.cluster, r.is_anomaly
            );
        }
        out
    }

    /// One change-point block index per line.
    pub fn change_points_text(&self) -> String {
        self.change_points
            .iter()
            .map(|c| format!("{c}\n"))
            .collect()
    }
}

/// One row per segment, labelled with the segment's majority cluster and
/// marked when an anomaly event covers it.
pub fn build_timeline(
    features: &FeatureSeries,
    segmentation: &Segmentation,
    labels: &[usize],
    anomalies: &[AnomalyEvent],
) -> Result<Timeline, OrchestratorError> {
    let n = features.len();
    for got in [segmentation.n, labels.len()] {
        if got != n {
            return Err(OrchestratorError::LengthMismatch { expected: n, got });
        }
    }
    let rows = segmentation
        .segments()
        .into_iter()
        .map(|r| TimelineRow {
            block_start: r.start,
            block_end: r.end,
            cluster: majority_label(&labels[r.clone()]).expect("segments are non-empty"),
            is_anomaly: anomalies.iter().any(|a| a.block_range == (r.start, r.end)),
            time_range: (
                features.blocks[r.start].time_range.0,
                features.blocks[r.end - 1].time_range.1,
            ),
        })
        .collect();
    Ok(Timeline {
        n_blocks: n,
        rows,
        change_points: segmentation.change_points.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readiness::{FeatureBlock, ReadinessConfig};

    fn features(n: usize) -> FeatureSeries {
        FeatureSeries {
            blocks: (0..n)
                .map(|i| FeatureBlock {
                    index: i,
                    peaks: [0.0; 3],
                    time_range: (i as i64 * 10, i as i64 * 10 + 9),
                })
                .collect(),
            config_used: ReadinessConfig::default(),
        }
    }

    #[test]
    fn rows_and_csv() {
        let seg = Segmentation {
            n: 6,
            change_points: vec![2, 4],
            total_cost: 0.0,
        };
        let labels = [0, 0, 1, 1, 0, 2];
        let anomaly = AnomalyEvent {
            machine: "m".into(),
            replica_version: "v1-00000000".into(),
            segment_index: 1,
            block_range: (2, 4),
            cluster_label: 1,
            rarity: 0.01,
            ts: 20,
        };
        let t = build_timeline(&features(6), &seg, &labels, &[anomaly]).unwrap();
        assert_eq!(
            t.to_csv(),
            "block_start,block_end,cluster,is_anomaly\n0,2,0,false\n2,4,1,true\n4,6,0,false\n"
        );
        assert_eq!(t.change_points_text(), "2\n4\n");
        assert_eq!(t.rows[1].time_range, (20, 39));
    }

    #[test]
    fn length_mismatch() {
        let seg = Segmentation {
            n: 5,
            change_points: vec![],
            total_cost: 0.0,
        };
        assert!(build_timeline(&features(6), &seg, &[0; 6], &[]).is_err());
    }
}
