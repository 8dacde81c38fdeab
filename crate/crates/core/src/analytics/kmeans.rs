//! Seeded k-means++ with Lloyd refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dimension, sq_dist, AnalyticsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub seed: u64,
    pub iterations_run: usize,
    /// Inertia after each assignment step, starting with the initial one.
    pub inertia_history: Vec<f64>,
}

/// k-means configuration. `n_init` restarts run with seeds derived from
/// `seed`; the lowest-inertia run wins (earliest on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
}

impl KMeans {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            seed: 0,
            max_iter: 100,
            tol: 1e-9,
            n_init: 1,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init.max(1);
        self
    }

    pub fn fit<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<KMeansModel, AnalyticsError> {
        let d = dimension(points)?;
        if self.k == 0 {
            return Err(AnalyticsError::InvalidConfig("k must be >= 1".into()));
        }
        if self.k > points.len() {
            return Err(AnalyticsError::KExceedsN {
                k: self.k,
                n: points.len(),
            });
        }
        let mut best: Option<KMeansModel> = None;
        for run in 0..self.n_init as u64 {
            let run_seed = self
                .seed
                .wrapping_add(run.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut model = lloyd(points, d, self.k, run_seed, self.max_iter, self.tol);
            model.seed = self.seed;
            if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
                best = Some(model);
            }
        }
        Ok(best.expect("n_init >= 1"))
    }
}

/// Single k-means++ initialisation followed by Lloyd iterations until the
/// largest centroid move is below `tol`, assignments stop changing, or
/// `max_iter` is reached.
pub fn kmeans_fit<P: AsRef<[f64]>>(
    points: &[P],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansModel, AnalyticsError> {
    KMeans::new(k)
        .seed(seed)
        .max_iter(max_iter)
        .tol(tol)
        .fit(points)
}

/// Nearest centroid by squared Euclidean distance; ties go to the lowest
/// index.
pub fn kmeans_assign(model: &KMeansModel, point: &[f64]) -> Result<usize, AnalyticsError> {
    let d = model.centroids.first().map_or(0, Vec::len);
    if point.len() != d {
        return Err(AnalyticsError::DimensionMismatch {
            expected: d,
            got: point.len(),
        });
    }
    Ok(nearest(&model.centroids, point).0)
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let dist = sq_dist(p, c);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

fn kmeans_pp<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].as_ref().to_vec()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p.as_ref(), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].as_ref().to_vec();
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(sq_dist(p.as_ref(), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign<P: AsRef<[f64]>>(points: &[P], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (j, dist) = nearest(centroids, p.as_ref());
            inertia += dist;
            j
        })
        .collect();
    (labels, inertia)
}

/// Means of the labelled groups. An empty cluster takes over the point
/// farthest from its current centroid (among clusters with spare points).
fn update<P: AsRef<[f64]>>(
    points: &[P],
    labels: &mut [usize],
    centroids: &[Vec<f64>],
    d: usize,
) -> Vec<Vec<f64>> {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let dist = sq_dist(p.as_ref(), &centroids[l]);
            if dist > far_d {
                far_d = dist;
                far = Some(i);
            }
        }
        if let Some(i) = far {
            counts[labels[i]] -= 1;
            labels[i] = j;
            counts[j] = 1;
        }
    }
    let mut sums = vec![vec![0.0; d]; k];
    for (p, &l) in points.iter().zip(labels.iter()) {
        for (s, v) in sums[l].iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(centroids)
        .map(|((s, c), old)| {
            if c == 0 {
                old.clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

fn lloyd<P: AsRef<[f64]>>(
    points: &[P],
    d: usize,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> KMeansModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp(points, k, &mut rng);
    let (mut labels, mut inertia) = assign(points, &centroids);
    let mut history = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let new_centroids = update(points, &mut labels, &centroids, d);
        let shift = centroids
            .iter()
            .zip(&new_centroids)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = new_centroids;
        let (new_labels, new_inertia) = assign(points, &centroids);
        let changed = new_labels != labels;
        labels = new_labels;
        inertia = new_inertia;
        history.push(inertia);
        if !changed || shift < tol {
            break;
        }
    }
    KMeansModel {
        k,
        centroids,
        labels,
        inertia,
        seed,
        iterations_run: iterations,
        inertia_history: history,
    }
}
