//! k-means++ seeding, optionally reweighted by point density.
//!
//! After a uniformly drawn first centroid, each further centroid is the point
//! `z` drawn with probability `ρ(z)·D(z)² / Σ ρ·D²`, where `D(z)` is the
//! distance to the nearest centroid chosen so far. Plain k-means++ is the
//! special case `ρ ≡ 1`.

use std::collections::HashSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{sq_dist, PqError};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeedingMode {
    /// Classic k-means++ (`ρ ≡ 1`).
    #[serde(rename = "pq")]
    KMeansPlusPlus,
    /// Density-aware seeding (`ρ` = Gaussian kernel density).
    #[default]
    Dapq,
}

/// How the kernel density enters the seeding weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DensityWeighting {
    /// Use `ρ(z)` as is.
    #[default]
    Raw,
    /// Use `max(log ρ(z) − min log ρ + ε, ε)`.
    Log,
}

pub const LOG_WEIGHT_EPSILON: f64 = 1e-6;

/// Turns log-densities into the per-point `ρ` factor of the seeding weight.
pub fn density_weights(log_density: &[f64], weighting: DensityWeighting) -> Vec<f64> {
    match weighting {
        DensityWeighting::Raw => log_density
            .iter()
            .map(|l| l.exp().max(f64::MIN_POSITIVE))
            .collect(),
        DensityWeighting::Log => {
            let min = log_density.iter().copied().fold(f64::INFINITY, f64::min);
            log_density
                .iter()
                .map(|l| (l - min + LOG_WEIGHT_EPSILON).max(LOG_WEIGHT_EPSILON))
                .collect()
        }
    }
}

/// Number of distinct rows; `-0.0` and `0.0` count as the same value.
pub fn distinct_points(points: &[f64], dim: usize) -> usize {
    let key = |row: &[f64]| -> Vec<u64> {
        row.iter()
            .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
            .collect()
    };
    points.chunks_exact(dim).map(key).collect::<HashSet<_>>().len()
}

/// Sampling distribution over points for the next centroid, or `None` when
/// every point already coincides with a centroid (all weights zero).
pub fn selection_probabilities(rho: Option<&[f64]>, nearest_sq: &[f64]) -> Option<Vec<f64>> {
    let weights: Vec<f64> = match rho {
        Some(rho) => rho.iter().zip(nearest_sq).map(|(r, d)| r * d).collect(),
        None => nearest_sq.to_vec(),
    };
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 || !total.is_finite() {
        return None;
    }
    Some(weights.into_iter().map(|w| w / total).collect())
}

/// Draws an index with probability proportional to `weights`; zero weights are never drawn.
fn sample_weighted(weights: &[f64], rng: &mut Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last_positive
}

/// Chooses `k` seed points; returns their row indices in selection order.
pub fn seed_centroids(
    points: &[f64],
    dim: usize,
    k: usize,
    rho: Option<&[f64]>,
    rng: &mut Rng,
) -> Result<Vec<usize>, PqError> {
    let n = points.len() / dim;
    if k == 0 {
        return Err(PqError::ZeroClusters);
    }
    let distinct = distinct_points(points, dim);
    if k > distinct {
        return Err(PqError::TooManyClusters { k, distinct });
    }
    let first = rng.random_range(0..n);
    extend_seeds(points, dim, k, rho, vec![first], rng)
}

/// Continues seeding from an already chosen set of point indices.
pub fn extend_seeds(
    points: &[f64],
    dim: usize,
    k: usize,
    rho: Option<&[f64]>,
    mut chosen: Vec<usize>,
    rng: &mut Rng,
) -> Result<Vec<usize>, PqError> {
    let n = points.len() / dim;
    if let Some(rho) = rho {
        assert_eq!(rho.len(), n, "one density per point");
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut nearest = vec![f64::INFINITY; n];
    for &c in &chosen {
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), row(c)));
        }
    }
    let mut weights = vec![0.0; n];
    while chosen.len() < k {
        for i in 0..n {
            weights[i] = rho.map_or(1.0, |r| r[i]) * nearest[i];
        }
        let Some(next) = sample_weighted(&weights, rng) else {
            return Err(PqError::TooManyClusters {
                k,
                distinct: chosen.len(),
            });
        };
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), row(next)));
        }
    }
    Ok(chosen)
}
