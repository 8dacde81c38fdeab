//! Segmentation and clustering on block feature vectors.
//!
//! Functions take any slice of points that deref to `[f64]`, so both
//! `[f64; 3]` feature vectors and ad-hoc `Vec<f64>` fixtures work.

mod kmeans;
mod pelt;
mod segments;
mod silhouette;

pub use kmeans::{kmeans_assign, kmeans_fit, KMeans, KMeansModel};
pub use pelt::{
    brute_force_segment, pelt_segment, PeltConfig, SegmentCost, Segmentation, BRUTE_FORCE_MAX_N,
};
pub use segments::{majority_label, segment_features, SegmentStats, SegmentSummary};
pub use silhouette::silhouette_score;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("series of {n} blocks is shorter than the minimum segment of {min}")]
    SeriesTooShort { n: usize, min: usize },
    #[error("series of {n} blocks exceeds the brute-force limit of {max}")]
    SeriesTooLong { n: usize, max: usize },
    #[error("k = {k} exceeds the number of points {n}")]
    KExceedsN { k: usize, n: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("silhouette needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("expected {expected} labels, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn dimension<P: AsRef<[f64]>>(points: &[P]) -> Result<usize, AnalyticsError> {
    let d = points
        .first()
        .ok_or(AnalyticsError::EmptyInput)?
        .as_ref()
        .len();
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != d) {
        return Err(AnalyticsError::DimensionMismatch {
            expected: d,
            got: p.as_ref().len(),
        });
    }
    Ok(d)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
