//! Bag-of-Words encoding of per-frame anatomical features.
//!
//! Variable-length feature streams become fixed M-dimensional histograms:
//! Lloyd's k-means learns M centroids ("keywords") from training-fold
//! frames, every frame is assigned to its nearest centroid, and the
//! per-cluster assignment frequencies are the histogram. Anatomical
//! dimensions are z-scored before clustering because meters and radians
//! are not commensurable under Euclidean distance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Standardizer;
use crate::error::{Error, Result};
use crate::features::GaitFeatures;

/// One anatomical feature frame: elbow distance, leg angle, two knee angles.
pub type Point4 = [f64; 4];

fn dist2(a: &Point4, b: &Point4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Stopping criteria for [`kmeans_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansOptions {
    pub max_iter: usize,
    /// Stop once the largest centroid movement drops below this.
    pub tol: f64,
}

impl Default for KmeansOptions {
    fn default() -> KmeansOptions {
        KmeansOptions {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

/// Raw output of one Lloyd run.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub centroids: Vec<Point4>,
    /// Sum of squared distances to assigned centroids, after the last update.
    pub inertia: f64,
    /// Inertia recorded at each assignment pass; non-increasing by
    /// construction of Lloyd's algorithm.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

/// Index of the nearest centroid; ties break to the lowest index.
pub fn assign(centroids: &[Point4], point: &Point4) -> usize {
    let mut best = 0;
    let mut best_d = dist2(&centroids[0], point);
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(c, point);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn distinct_count(points: &[Point4]) -> usize {
    let mut sorted: Vec<Point4> = points.to_vec();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted.dedup();
    sorted.len()
}

/// Lloyd's k-means over 4-d points.
///
/// Initial centroids are `k` distinct values drawn uniformly without
/// replacement from the points (seeded, so the fit is deterministic given
/// the point order, k, and seed). Iteration stops when the largest centroid
/// movement falls below `tol` or after `max_iter` rounds. A cluster that
/// loses all members is reseeded to the point farthest from its current
/// centroid, which keeps all `k` centroids distinct whenever the data has
/// at least `k` distinct values.
pub fn kmeans_fit(points: &[Point4], k: usize, seed: u64, opts: &KmeansOptions) -> Result<KmeansFit> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            k,
            n: points.len(),
        });
    }
    let distinct = distinct_count(points);
    if distinct < k {
        return Err(Error::TooFewDistinctPoints { k, distinct });
    }

    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut centroids: Vec<Point4> = Vec::with_capacity(k);
    for &i in &order {
        if centroids.iter().all(|c| *c != points[i]) {
            centroids.push(points[i]);
            if centroids.len() == k {
                break;
            }
        }
    }
    debug_assert_eq!(centroids.len(), k);

    let mut assignment = vec![0usize; n];
    let mut point_dist2 = vec![0.0f64; n];
    let mut inertia_history = Vec::new();
    let mut iterations = 0;

    let assign_pass = |centroids: &[Point4], assignment: &mut [usize], point_dist2: &mut [f64]| {
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let c = assign(centroids, p);
            assignment[i] = c;
            point_dist2[i] = dist2(&centroids[c], p);
            inertia += point_dist2[i];
        }
        inertia
    };

    loop {
        let inertia = assign_pass(&centroids, &mut assignment, &mut point_dist2);
        inertia_history.push(inertia);

        let mut counts = vec![0usize; k];
        for &c in &assignment {
            counts[c] += 1;
        }
        // Reseed empty clusters from the farthest point of a multi-member
        // cluster (donating from a singleton would just move the hole).
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let mut donor: Option<usize> = None;
            for i in 0..n {
                if counts[assignment[i]] < 2 {
                    continue;
                }
                if donor.map_or(true, |d| point_dist2[i] > point_dist2[d]) {
                    donor = Some(i);
                }
            }
            let donor = donor.expect("a multi-member cluster exists while some cluster is empty");
            counts[assignment[donor]] -= 1;
            counts[empty] += 1;
            assignment[donor] = empty;
            centroids[empty] = points[donor];
            point_dist2[donor] = 0.0;
        }

        // Update step: each centroid moves to the mean of its members,
        // accumulated as deltas from the current centroid so a cluster
        // whose members coincide with it stays put exactly.
        let mut delta_sums = vec![[0.0f64; 4]; k];
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            for d in 0..4 {
                delta_sums[c][d] += p[d] - centroids[c][d];
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            let mut mean = centroids[c];
            for d in 0..4 {
                mean[d] += delta_sums[c][d] / counts[c] as f64;
            }
            movement = movement.max(dist2(&centroids[c], &mean).sqrt());
            centroids[c] = mean;
        }
        iterations += 1;

        if movement < opts.tol || iterations >= opts.max_iter {
            break;
        }
    }

    // Final inertia against the converged centroids.
    let inertia = assign_pass(&centroids, &mut assignment, &mut point_dist2);
    inertia_history.push(inertia);

    Ok(KmeansFit {
        centroids,
        inertia,
        inertia_history,
        iterations,
    })
}

/// A fitted vocabulary: M centroids in standardized feature space plus the
/// scaler that maps raw anatomical frames into that space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub centroids: Vec<Point4>,
    pub scaler: Standardizer,
    /// Fit diagnostic; not persisted.
    #[serde(skip)]
    pub inertia: f64,
    #[serde(skip)]
    pub inertia_history: Vec<f64>,
}

impl Codebook {
    /// Fits the scaler and the k-means vocabulary on raw training frames.
    pub fn fit(points: &[Point4], k: usize, seed: u64, opts: &KmeansOptions) -> Result<Codebook> {
        let scaler = Standardizer::fit_iter(points.iter().map(|p| &p[..]), 4)?;
        let standardized: Vec<Point4> = points.iter().map(|p| scale4(&scaler, p)).collect();
        let fit = kmeans_fit(&standardized, k, seed, opts)?;
        Ok(Codebook {
            m: k,
            seed,
            centroids: fit.centroids,
            scaler,
            inertia: fit.inertia,
            inertia_history: fit.inertia_history,
        })
    }

    /// Nearest-centroid assignment of one raw frame.
    pub fn assign(&self, point: &Point4) -> usize {
        assign(&self.centroids, &scale4(&self.scaler, point))
    }

    /// L1-normalized assignment histogram of a raw frame stream.
    pub fn histogram(&self, stream: &[Point4]) -> Result<BowHistogram> {
        if stream.is_empty() {
            return Err(Error::EmptyStream);
        }
        let mut counts = vec![0usize; self.m];
        for p in stream {
            counts[self.assign(p)] += 1;
        }
        let n = stream.len() as f64;
        Ok(BowHistogram {
            weights: counts.iter().map(|&c| c as f64 / n).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("codebook serializes")
    }

    pub fn from_json(text: &str) -> Result<Codebook> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(format!("invalid codebook JSON: {}", e)))
    }
}

fn scale4(scaler: &Standardizer, p: &Point4) -> Point4 {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (p[i] - scaler.mean[i]) / scaler.std[i];
    }
    out
}

/// Normalized bag-of-words histogram; weights sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowHistogram {
    pub weights: Vec<f64>,
}

/// The (3 + M)-dimensional classifier input: the three gait numbers
/// followed by the histogram weights.
pub fn build_feature_vector(gait: &GaitFeatures, hist: &BowHistogram) -> Vec<f64> {
    let mut v = Vec::with_capacity(3 + hist.weights.len());
    v.push(gait.num_steps as f64);
    v.push(gait.avg_step_duration_s);
    v.push(gait.turn_duration_s);
    v.extend_from_slice(&hist.weights);
    v
}
