//! Isotropic Gaussian kernel density over the points of one subspace.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sq_dist, PqError};
use crate::rng::{self, Rng};

/// Above this many points densities are estimated against a subsample.
pub const SUBSAMPLE_THRESHOLD: usize = 50_000;
pub const SUBSAMPLE_SIZE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Bandwidth {
    /// Scott's rule: mean per-dimension standard deviation times N^(-1/(d+4)).
    #[default]
    Auto,
    Fixed(f64),
}

/// Scott's rule bandwidth for `points` (row-major, `dim` columns).
pub fn scott_bandwidth(points: &[f64], dim: usize) -> Result<f64, PqError> {
    let n = points.len() / dim;
    if n < 2 {
        return Err(PqError::TooFewPoints { found: n, needed: 2 });
    }
    let mut sigma_sum = 0.0;
    for d in 0..dim {
        let mean = points.iter().skip(d).step_by(dim).sum::<f64>() / n as f64;
        let var = points
            .iter()
            .skip(d)
            .step_by(dim)
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        sigma_sum += var.sqrt();
    }
    let sigma = sigma_sum / dim as f64;
    let h = sigma * (n as f64).powf(-1.0 / (dim as f64 + 4.0));
    if !(h > 0.0 && h.is_finite()) {
        return Err(PqError::DegenerateBandwidth);
    }
    Ok(h)
}

pub fn resolve_bandwidth(bandwidth: Bandwidth, points: &[f64], dim: usize) -> Result<f64, PqError> {
    match bandwidth {
        Bandwidth::Auto => scott_bandwidth(points, dim),
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Ok(h),
        Bandwidth::Fixed(h) => Err(PqError::InvalidBandwidth(h)),
    }
}

/// Natural log of the kernel density at every point, evaluated with log-sum-exp
/// so far-away points do not underflow to zero.
pub fn log_kde_density(
    points: &[f64],
    dim: usize,
    bandwidth: Bandwidth,
    rng: &mut Rng,
) -> Result<Vec<f64>, PqError> {
    let n = points.len() / dim;
    if n == 0 {
        return Err(PqError::TooFewPoints { found: 0, needed: 1 });
    }
    let h = resolve_bandwidth(bandwidth, points, dim)?;

    let reference: Vec<f64> = if n > SUBSAMPLE_THRESHOLD {
        let mut picked = index::sample(rng, n, SUBSAMPLE_SIZE).into_vec();
        picked.sort_unstable();
        picked
            .iter()
            .flat_map(|&i| points[i * dim..(i + 1) * dim].iter().copied())
            .collect()
    } else {
        points.to_vec()
    };
    let r = reference.len() / dim;
    let inv_two_h2 = 1.0 / (2.0 * h * h);
    let log_norm = -(r as f64).ln() - 0.5 * dim as f64 * (2.0 * std::f64::consts::PI * h * h).ln();

    let log_rho = points
        .par_chunks_exact(dim)
        .map(|z| {
            let mut max = f64::NEG_INFINITY;
            for y in reference.chunks_exact(dim) {
                max = max.max(-sq_dist(z, y) * inv_two_h2);
            }
            let sum: f64 = reference
                .chunks_exact(dim)
                .map(|y| (-sq_dist(z, y) * inv_two_h2 - max).exp())
                .sum();
            log_norm + max + sum.ln()
        })
        .collect();
    Ok(log_rho)
}

/// Kernel density ρ(z) = (1/N) Σ_y K_h(z − y) at every point.
pub fn kde_density(points: &[f64], dim: usize, bandwidth: Bandwidth) -> Result<Vec<f64>, PqError> {
    let mut rng = rng::substream(0, rng::stream::KDE_SUBSAMPLE);
    Ok(log_kde_density(points, dim, bandwidth, &mut rng)?
        .into_iter()
        .map(|l| l.exp().max(f64::MIN_POSITIVE))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(points: &[f64], dim: usize, h: f64) -> Vec<f64> {
        let n = points.len() / dim;
        let norm = (2.0 * std::f64::consts::PI * h * h).powf(dim as f64 / 2.0);
        points
            .chunks(dim)
            .map(|z| {
                points
                    .chunks(dim)
                    .map(|y| {
                        let d2: f64 = z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                        (-d2 / (2.0 * h * h)).exp() / norm
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn matches_direct_evaluation() {
        let pts = [0.0, 0.0, 1.0, 0.5, -0.3, 2.0, 4.0, 4.0];
        let got = kde_density(&pts, 2, Bandwidth::Fixed(0.7)).unwrap();
        for (g, e) in got.iter().zip(naive(&pts, 2, 0.7)) {
            assert!((g - e).abs() <= 1e-12 * e.max(1.0), "{g} vs {e}");
        }
    }

    #[test]
    fn isolated_point_has_minimum_density() {
        let mut pts = Vec::new();
        for i in 0..50 {
            let t = i as f64 * 0.01;
            pts.extend([t, -t]);
            pts.extend([5.0 + t, 5.0 - t]);
        }
        pts.extend([40.0, -40.0]);
        let rho = kde_density(&pts, 2, Bandwidth::Fixed(1.0)).unwrap();
        let oracle = naive(&pts, 2, 1.0);
        let argmin = |v: &[f64]| {
            v.iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmin(&rho), 100);
        assert_eq!(argmin(&oracle), 100);
        assert!(rho.iter().all(|&r| r > 0.0));
    }

    #[test]
    fn duplicates_have_equal_density() {
        let pts = vec![1.5; 20];
        let rho = kde_density(&pts, 2, Bandwidth::Fixed(0.3)).unwrap();
        assert!(rho.windows(2).all(|w| w[0] == w[1]));
        assert!(rho.iter().sum::<f64>().is_finite());
    }

    #[test]
    fn auto_bandwidth_rejects_identical_points() {
        let pts = vec![2.0; 10];
        assert!(matches!(
            kde_density(&pts, 2, Bandwidth::Auto),
            Err(PqError::DegenerateBandwidth)
        ));
        assert!(matches!(
            kde_density(&pts, 2, Bandwidth::Fixed(-1.0)),
            Err(PqError::InvalidBandwidth(_))
        ));
    }

    #[test]
    fn scott_rule_value() {
        // two points at distance 2 in 1-D: std = sqrt(2), h = sqrt(2) * 2^(-1/5)
        let h = scott_bandwidth(&[0.0, 2.0], 1).unwrap();
        assert!((h - 2f64.sqrt() * 2f64.powf(-0.2)).abs() < 1e-15);
    }

    #[test]
    fn large_inputs_use_a_deterministic_subsample() {
        let n = SUBSAMPLE_THRESHOLD + 1;
        let pts: Vec<f64> = (0..n).map(|i| (i % 977) as f64 * 0.001).collect();
        let a = kde_density(&pts, 1, Bandwidth::Fixed(0.05)).unwrap();
        let b = kde_density(&pts, 1, Bandwidth::Fixed(0.05)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&r| r > 0.0));
    }
}
