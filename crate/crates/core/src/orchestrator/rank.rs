use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{OrchestratorError, ReplicaResult};

pub const RANKING_RULE: &str =
    "silhouette desc, segment_count asc, penalty asc, replica_version asc";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Results in ranked order; the first is the selected replica.
    pub results: Vec<ReplicaResult>,
    pub selected: String,
    pub ranking_rule_applied: String,
}

impl BenchmarkReport {
    pub fn winner(&self) -> &ReplicaResult {
        &self.results[0]
    }
}

fn compare(a: &ReplicaResult, b: &ReplicaResult) -> Ordering {
    b.silhouette
        .total_cmp(&a.silhouette)
        .then(a.segment_count.cmp(&b.segment_count))
        .then(a.hyperparams.penalty.total_cmp(&b.hyperparams.penalty))
        .then_with(|| a.replica_version.cmp(&b.replica_version))
}

/// Orders results by the ranking rule and selects the first.
pub fn rank_replicas(
    mut results: Vec<ReplicaResult>,
) -> Result<BenchmarkReport, OrchestratorError> {
    if results.is_empty() {
        return Err(OrchestratorError::NoResults);
    }
    results.sort_by(compare);
    Ok(BenchmarkReport {
        selected: results[0].replica_version.clone(),
        results,
        ranking_rule_applied: RANKING_RULE.to_owned(),
    })
}
