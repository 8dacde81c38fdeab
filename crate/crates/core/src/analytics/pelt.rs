//! Penalized change-point search under the multivariate L2 cost.
//!
//! Objective: `Σ C(segment) + penalty · #change_points`, where `C` is the sum
//! over dimensions of squared deviations from the segment mean. The optimal
//! value `F(t)` of the prefix `[0, t)` satisfies
//! `F(t) = min_s F(s) + C(s, t) + penalty` (no penalty for `s = 0`).
//! [`pelt_segment`] evaluates the recursion with candidate pruning;
//! [`brute_force_segment`] evaluates it over every admissible `s`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{dimension, AnalyticsError};

/// Largest input accepted by [`brute_force_segment`].
pub const BRUTE_FORCE_MAX_N: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeltConfig {
    pub penalty: f64,
    /// Minimum segment length in blocks.
    pub min_segment: usize,
}

impl PeltConfig {
    pub fn new(penalty: f64) -> Self {
        Self {
            penalty,
            min_segment: 2,
        }
    }

    pub fn with_min_segment(mut self, min_segment: usize) -> Self {
        self.min_segment = min_segment;
        self
    }

    fn validate(&self) -> Result<(), AnalyticsError> {
        if !(self.penalty.is_finite() && self.penalty >= 0.0) {
            return Err(AnalyticsError::InvalidConfig(format!(
                "penalty {} must be finite and >= 0",
                self.penalty
            )));
        }
        if self.min_segment == 0 {
            return Err(AnalyticsError::InvalidConfig(
                "min_segment must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for PeltConfig {
    fn default() -> Self {
        Self::new(40.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub n: usize,
    /// Strictly increasing indices in `(0, n)`.
    pub change_points: Vec<usize>,
    pub total_cost: f64,
}

impl Segmentation {
    /// Segments as half-open ranges tiling `[0, n)`.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut bounds = Vec::with_capacity(self.change_points.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(&self.change_points);
        bounds.push(self.n);
        bounds.windows(2).map(|w| w[0]..w[1]).collect()
    }

    pub fn segment_count(&self) -> usize {
        self.change_points.len() + 1
    }
}

/// O(1) segment costs from per-dimension prefix sums.
#[derive(Debug, Clone)]
pub struct SegmentCost {
    dim: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl SegmentCost {
    pub fn new<P: AsRef<[f64]>>(points: &[P]) -> Result<Self, AnalyticsError> {
        let dim = dimension(points)?;
        let n = points.len();
        let mut sum = vec![0.0; (n + 1) * dim];
        let mut sum_sq = vec![0.0; (n + 1) * dim];
        for (i, p) in points.iter().enumerate() {
            for (d, &v) in p.as_ref().iter().enumerate() {
                sum[(i + 1) * dim + d] = sum[i * dim + d] + v;
                sum_sq[(i + 1) * dim + d] = sum_sq[i * dim + d] + v * v;
            }
        }
        Ok(Self { dim, sum, sum_sq })
    }

    /// Cost of `[start, end)`, clamped at zero against rounding.
    pub fn cost(&self, start: usize, end: usize) -> f64 {
        let len = (end - start) as f64;
        let mut c = 0.0;
        for d in 0..self.dim {
            let s = self.sum[end * self.dim + d] - self.sum[start * self.dim + d];
            let s2 = self.sum_sq[end * self.dim + d] - self.sum_sq[start * self.dim + d];
            c += s2 - s * s / len;
        }
        c.max(0.0)
    }
}

struct Recursion<'a> {
    cost: &'a SegmentCost,
    penalty: f64,
    best: Vec<f64>,
    prev: Vec<usize>,
}

impl<'a> Recursion<'a> {
    fn new(cost: &'a SegmentCost, n: usize, penalty: f64) -> Self {
        let mut best = vec![f64::INFINITY; n + 1];
        best[0] = 0.0;
        Self {
            cost,
            penalty,
            best,
            prev: vec![0; n + 1],
        }
    }

    /// Value of ending the last segment of `[0, t)` at `s`.
    fn candidate(&self, s: usize, t: usize) -> f64 {
        if s == 0 {
            self.cost.cost(0, t)
        } else {
            self.best[s] + self.cost.cost(s, t) + self.penalty
        }
    }

    fn finish(self, n: usize) -> Segmentation {
        let mut change_points = Vec::new();
        let mut t = n;
        while t > 0 {
            let s = self.prev[t];
            if s > 0 {
                change_points.push(s);
            }
            t = s;
        }
        change_points.reverse();
        Segmentation {
            n,
            change_points,
            total_cost: self.best[n],
        }
    }
}

fn prepare<P: AsRef<[f64]>>(
    points: &[P],
    config: &PeltConfig,
) -> Result<SegmentCost, AnalyticsError> {
    config.validate()?;
    if points.len() < config.min_segment || points.is_empty() {
        return Err(AnalyticsError::SeriesTooShort {
            n: points.len(),
            min: config.min_segment,
        });
    }
    SegmentCost::new(points)
}

/// Exact penalized segmentation with PELT pruning.
///
/// A candidate `s` is discarded once `F(s) + C(s, t) > F(t)`; because `t`
/// only becomes a usable last change point for ends `T ≥ t + min_segment`,
/// the discarded candidate stays available until then.
pub fn pelt_segment<P: AsRef<[f64]>>(
    points: &[P],
    config: &PeltConfig,
) -> Result<Segmentation, AnalyticsError> {
    let cost = prepare(points, config)?;
    let n = points.len();
    let m = config.min_segment;
    let mut rec = Recursion::new(&cost, n, config.penalty);
    // (start, first end at which the candidate is no longer considered)
    let mut candidates: Vec<(usize, usize)> = vec![(0, usize::MAX)];
    let mut values: Vec<f64> = Vec::new();
    for t in m..=n {
        if t >= 2 * m {
            candidates.push((t - m, usize::MAX));
        }
        candidates.retain(|&(_, expiry)| t < expiry);
        values.clear();
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for &(s, _) in &candidates {
            let v = rec.candidate(s, t);
            values.push(v);
            if v < best {
                best = v;
                arg = s;
            }
        }
        rec.best[t] = best;
        rec.prev[t] = arg;
        // Small slack keeps rounding from pruning a candidate that is
        // mathematically tied.
        let limit = best + config.penalty + 1e-10 * (1.0 + best.abs());
        for (c, &v) in candidates.iter_mut().zip(&values) {
            if v > limit {
                c.1 = c.1.min(t + m);
            }
        }
    }
    Ok(rec.finish(n))
}

/// Exact penalized segmentation by the unpruned O(n²) recursion; the
/// reference [`pelt_segment`] is checked against.
pub fn brute_force_segment<P: AsRef<[f64]>>(
    points: &[P],
    config: &PeltConfig,
) -> Result<Segmentation, AnalyticsError> {
    if points.len() > BRUTE_FORCE_MAX_N {
        return Err(AnalyticsError::SeriesTooLong {
            n: points.len(),
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let cost = prepare(points, config)?;
    let n = points.len();
    let m = config.min_segment;
    let mut rec = Recursion::new(&cost, n, config.penalty);
    for t in m..=n {
        let mut best = rec.candidate(0, t);
        let mut arg = 0;
        for s in m..=t.saturating_sub(m) {
            let v = rec.candidate(s, t);
            if v < best {
                best = v;
                arg = s;
            }
        }
        rec.best[t] = best;
        rec.prev[t] = arg;
    }
    Ok(rec.finish(n))
}
