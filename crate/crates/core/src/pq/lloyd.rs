//! Lloyd iterations for a single subspace.

use super::sq_dist;

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult {
    /// Row-major `k × dim` centroids.
    pub centroids: Vec<f64>,
    /// Nearest-centroid index of every point under `centroids`.
    pub assignments: Vec<u32>,
    /// Sum of squared distances after the initial assignment and after every iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl LloydResult {
    pub fn distortion(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }
}

/// Index and squared distance of the nearest centroid; ties go to the lowest index.
pub fn nearest_centroid(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[f64], centroids: &[f64], dim: usize, out: &mut [u32]) -> f64 {
    let mut total = 0.0;
    for (slot, p) in out.iter_mut().zip(points.chunks_exact(dim)) {
        let (j, d) = nearest_centroid(p, centroids, dim);
        *slot = j as u32;
        total += d;
    }
    total
}

/// Runs assignment/update rounds until the assignment stops changing or
/// `max_iterations` updates have been made.
///
/// A cluster left empty by an update is moved onto the point farthest from
/// its nearest surviving centroid, so `k` never shrinks.
pub fn lloyd(points: &[f64], dim: usize, initial: Vec<f64>, max_iterations: usize) -> LloydResult {
    assert!(!initial.is_empty() && initial.len().is_multiple_of(dim), "need at least one centroid");
    let n = points.len() / dim;
    let k = initial.len() / dim;
    let mut centroids = initial;
    let mut assignments = vec![0u32; n];
    let mut trace = vec![assign(points, &centroids, dim, &mut assignments)];
    let mut next = vec![0u32; n];
    let mut converged = false;

    for _ in 0..max_iterations {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.chunks_exact(dim).zip(&assignments) {
            let a = a as usize;
            counts[a] += 1;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut empty = Vec::new();
        for j in 0..k {
            if counts[j] == 0 {
                empty.push(j);
                continue;
            }
            let inv = 1.0 / counts[j] as f64;
            for d in 0..dim {
                centroids[j * dim + d] = sums[j * dim + d] * inv;
            }
        }
        if !empty.is_empty() {
            repair_empty(points, dim, &mut centroids, &counts, &empty);
        }

        let distortion = assign(points, &centroids, dim, &mut next);
        trace.push(distortion);
        if next == assignments {
            converged = true;
            break;
        }
        std::mem::swap(&mut assignments, &mut next);
    }

    LloydResult {
        centroids,
        assignments,
        trace,
        converged,
    }
}

fn repair_empty(points: &[f64], dim: usize, centroids: &mut [f64], counts: &[usize], empty: &[usize]) {
    let live: Vec<usize> = (0..counts.len()).filter(|&j| counts[j] > 0).collect();
    let mut nearest: Vec<f64> = points
        .chunks_exact(dim)
        .map(|p| {
            live.iter()
                .map(|&j| sq_dist(p, &centroids[j * dim..(j + 1) * dim]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    for &j in empty {
        let (far, _) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        let p = &points[far * dim..(far + 1) * dim];
        centroids[j * dim..(j + 1) * dim].copy_from_slice(p);
        for (d, q) in nearest.iter_mut().zip(points.chunks_exact(dim)) {
            *d = d.min(sq_dist(q, p));
        }
    }
}
