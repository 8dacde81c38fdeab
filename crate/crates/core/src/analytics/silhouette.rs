use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{dimension, sq_dist, AnalyticsError};

/// Mean silhouette coefficient under Euclidean distance.
///
/// Points in singleton clusters contribute 0; a labelling with a single
/// cluster scores 0. Per-point coefficients are computed in parallel and
/// averaged in index order.
pub fn silhouette_score<P: AsRef<[f64]> + Sync>(
    points: &[P],
    labels: &[usize],
) -> Result<f64, AnalyticsError> {
    if points.len() < 2 {
        return Err(AnalyticsError::TooFewPoints(points.len()));
    }
    if labels.len() != points.len() {
        return Err(AnalyticsError::LengthMismatch {
            expected: points.len(),
            got: labels.len(),
        });
    }
    dimension(points)?;
    let index: BTreeMap<usize, usize> = labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let k = index.len();
    if k < 2 {
        return Ok(0.0);
    }
    let compact: Vec<usize> = labels.iter().map(|l| index[l]).collect();
    let mut sizes = vec![0usize; k];
    for &c in &compact {
        sizes[c] += 1;
    }

    let coefficients: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = compact[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            let p = points[i].as_ref();
            for (j, q) in points.iter().enumerate() {
                if j != i {
                    sums[compact[j]] += sq_dist(p, q.as_ref()).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(coefficients.iter().sum::<f64>() / coefficients.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_separated_pairs() {
        let pts = [[0.0], [0.1], [10.0], [10.1]];
        let s = silhouette_score(&pts, &[0, 0, 1, 1]).unwrap();
        // By hand: a = 0.1 for every point; b = 10.05, 9.95, 9.95, 10.05.
        let expected = [10.05, 9.95, 9.95, 10.05]
            .iter()
            .map(|b| (b - 0.1) / b)
            .sum::<f64>()
            / 4.0;
        assert!((s - expected).abs() < 1e-12);
        assert!(s > 0.98 && s < 1.0);
    }

    #[test]
    fn one_cluster_scores_zero() {
        let pts = [[0.0], [1.0], [2.0]];
        assert_eq!(silhouette_score(&pts, &[4, 4, 4]).unwrap(), 0.0);
    }

    #[test]
    fn singletons_contribute_zero() {
        let pts = [[0.0], [0.0], [5.0]];
        let s = silhouette_score(&pts, &[0, 0, 1]).unwrap();
        // Points 0 and 1: a = 0, b = 5 -> 1 each; point 2 is a singleton.
        assert!((s - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(
            silhouette_score(&[[0.0]], &[0]),
            Err(AnalyticsError::TooFewPoints(1))
        );
        assert_eq!(
            silhouette_score(&[[0.0], [1.0]], &[0]),
            Err(AnalyticsError::LengthMismatch {
                expected: 2,
                got: 1
            })
        );
    }
}
