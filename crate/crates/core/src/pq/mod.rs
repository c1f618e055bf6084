//! Product quantization: contiguous subspace split, per-subspace density-aware
//! k-means++ seeding and Lloyd refinement, encoding to code tuples,
//! reconstruction and distortion.

pub mod kde;
pub mod lloyd;
pub mod seeding;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingMatrix;
use crate::rng;

pub use kde::Bandwidth;
pub use lloyd::LloydResult;
pub use seeding::{DensityWeighting, SeedingMode};

#[derive(Debug, Error, PartialEq)]
pub enum PqError {
    #[error("number of subspaces must be at least 1")]
    ZeroSubspaces,
    #[error("dimension {dim} is not divisible into {m} subspaces")]
    Indivisible { dim: usize, m: usize },
    #[error("vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("expected {expected} cluster counts, got {found}")]
    WrongClusterCount { expected: usize, found: usize },
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("cannot seed {k} clusters from {distinct} distinct points")]
    TooManyClusters { k: usize, distinct: usize },
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("all points coincide; automatic bandwidth is zero")]
    DegenerateBandwidth,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("code index {index} out of range for subspace {subspace} with {k} centroids")]
    IndexOutOfRange { subspace: usize, index: u32, k: usize },
    #[error("code tuple has {found} entries, expected {expected}")]
    TupleArity { expected: usize, found: usize },
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `m` contiguous blocks of `sub_dim` dimensions each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspacePartition {
    m: usize,
    sub_dim: usize,
}

impl SubspacePartition {
    pub fn new(dim: usize, m: usize) -> Result<Self, PqError> {
        if m == 0 {
            return Err(PqError::ZeroSubspaces);
        }
        if dim == 0 || !dim.is_multiple_of(m) {
            return Err(PqError::Indivisible { dim, m });
        }
        Ok(SubspacePartition { m, sub_dim: dim / m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }

    pub fn dim(&self) -> usize {
        self.m * self.sub_dim
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        i * self.sub_dim..(i + 1) * self.sub_dim
    }

    /// The `m` subvectors of `x`, in order.
    pub fn split<'a>(&self, x: &'a [f64]) -> Result<Vec<&'a [f64]>, PqError> {
        if x.len() != self.dim() {
            return Err(PqError::LengthMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.chunks_exact(self.sub_dim).collect())
    }

    /// Row-major points of subspace `i` across all rows of `x`.
    pub fn subspace_points(&self, x: &EmbeddingMatrix, i: usize) -> Vec<f64> {
        let r = self.range(i);
        x.iter_rows().flat_map(|row| row[r.clone()].iter().copied()).collect()
    }
}

/// Splits `x` into `m` equal contiguous subvectors.
pub fn split_subvectors(x: &[f64], m: usize) -> Result<Vec<Vec<f64>>, PqError> {
    let p = SubspacePartition::new(x.len(), m)?;
    Ok(p.split(x)?.into_iter().map(<[f64]>::to_vec).collect())
}

/// One centroid index per subspace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CodeTuple(pub Vec<u32>);

impl CodeTuple {
    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for CodeTuple {
    fn from(v: Vec<u32>) -> Self {
        CodeTuple(v)
    }
}

impl fmt::Display for CodeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Everything besides the data and cluster counts that determines training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub mode: SeedingMode,
    pub weighting: DensityWeighting,
    pub bandwidth: Bandwidth,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            mode: SeedingMode::Dapq,
            weighting: DensityWeighting::Raw,
            bandwidth: Bandwidth::Auto,
            seed: crate::DEFAULT_SEED,
            max_iterations: lloyd::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Trained product quantizer: one sub-codebook of `k_i` centroids per subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    partition: SubspacePartition,
    /// Row-major `k_i × sub_dim` centroids per subspace.
    sub_codebooks: Vec<Vec<f64>>,
    config: TrainingConfig,
}

impl Codebook {
    pub fn from_parts(
        partition: SubspacePartition,
        sub_codebooks: Vec<Vec<f64>>,
        config: TrainingConfig,
    ) -> Result<Self, PqError> {
        if sub_codebooks.len() != partition.m() {
            return Err(PqError::WrongClusterCount {
                expected: partition.m(),
                found: sub_codebooks.len(),
            });
        }
        for c in &sub_codebooks {
            if c.is_empty() || c.len() % partition.sub_dim() != 0 {
                return Err(PqError::ZeroClusters);
            }
        }
        Ok(Codebook {
            partition,
            sub_codebooks,
            config,
        })
    }

    pub fn partition(&self) -> SubspacePartition {
        self.partition
    }

    pub fn m(&self) -> usize {
        self.partition.m()
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn k(&self, i: usize) -> usize {
        self.sub_codebooks[i].len() / self.partition.sub_dim()
    }

    pub fn ks(&self) -> Vec<usize> {
        (0..self.m()).map(|i| self.k(i)).collect()
    }

    pub fn sub_codebook(&self, i: usize) -> &[f64] {
        &self.sub_codebooks[i]
    }

    pub fn centroid(&self, i: usize, j: usize) -> &[f64] {
        let d = self.partition.sub_dim();
        &self.sub_codebooks[i][j * d..(j + 1) * d]
    }

    /// Nearest centroid per subspace, lowest index on ties.
    pub fn quantize(&self, x: &[f64]) -> Result<CodeTuple, PqError> {
        let subs = self.partition.split(x)?;
        Ok(CodeTuple(
            subs.iter()
                .enumerate()
                .map(|(i, u)| {
                    lloyd::nearest_centroid(u, &self.sub_codebooks[i], self.partition.sub_dim()).0
                        as u32
                })
                .collect(),
        ))
    }

    pub fn quantize_all(&self, x: &EmbeddingMatrix) -> Result<Vec<CodeTuple>, PqError> {
        x.iter_rows().map(|r| self.quantize(r)).collect()
    }

    pub fn check_tuple(&self, t: &CodeTuple) -> Result<(), PqError> {
        if t.len() != self.m() {
            return Err(PqError::TupleArity {
                expected: self.m(),
                found: t.len(),
            });
        }
        for (i, &j) in t.0.iter().enumerate() {
            if j as usize >= self.k(i) {
                return Err(PqError::IndexOutOfRange {
                    subspace: i,
                    index: j,
                    k: self.k(i),
                });
            }
        }
        Ok(())
    }

    /// Concatenation of the centroids named by `t`.
    pub fn reconstruct(&self, t: &CodeTuple) -> Result<Vec<f64>, PqError> {
        self.check_tuple(t)?;
        Ok(t.0
            .iter()
            .enumerate()
            .flat_map(|(i, &j)| self.centroid(i, j as usize).iter().copied())
            .collect())
    }

    /// Per-subspace sums of squared distances to the nearest centroid.
    pub fn subspace_distortions(&self, x: &EmbeddingMatrix) -> Result<Vec<f64>, PqError> {
        if x.dim() != self.dim() {
            return Err(PqError::LengthMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let sd = self.partition.sub_dim();
        Ok((0..self.m())
            .map(|i| {
                let r = self.partition.range(i);
                x.iter_rows()
                    .map(|row| lloyd::nearest_centroid(&row[r.clone()], &self.sub_codebooks[i], sd).1)
                    .sum()
            })
            .collect())
    }

    /// `Σ_x ‖x − q(x)‖²`.
    pub fn distortion(&self, x: &EmbeddingMatrix) -> Result<f64, PqError> {
        let mut total = 0.0;
        for row in x.iter_rows() {
            let q = self.reconstruct(&self.quantize(row)?)?;
            total += sq_dist(row, &q);
        }
        Ok(total)
    }
}

/// Subspace points plus their seeding densities, computed once and reused
/// across training rounds with different cluster counts.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    partition: SubspacePartition,
    points: Vec<Vec<f64>>,
    rho: Vec<Option<Vec<f64>>>,
    distinct: Vec<usize>,
    config: TrainingConfig,
}

/// Result of training one subspace with one cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSubspace {
    pub k: usize,
    pub lloyd: LloydResult,
}

impl TrainingSet {
    pub fn prepare(
        x: &EmbeddingMatrix,
        partition: SubspacePartition,
        config: &TrainingConfig,
    ) -> Result<Self, PqError> {
        if x.dim() != partition.dim() {
            return Err(PqError::Indivisible {
                dim: x.dim(),
                m: partition.m(),
            });
        }
        if x.rows() == 0 {
            return Err(PqError::TooFewPoints { found: 0, needed: 1 });
        }
        let sd = partition.sub_dim();
        let points: Vec<Vec<f64>> = (0..partition.m())
            .map(|i| partition.subspace_points(x, i))
            .collect();
        let rho = points
            .iter()
            .enumerate()
            .map(|(i, pts)| match config.mode {
                SeedingMode::KMeansPlusPlus => Ok(None),
                SeedingMode::Dapq => {
                    let mut r = rng::substream(config.seed, rng::stream::KDE_SUBSAMPLE | i as u64);
                    let log_rho = kde::log_kde_density(pts, sd, config.bandwidth, &mut r)?;
                    Ok(Some(seeding::density_weights(&log_rho, config.weighting)))
                }
            })
            .collect::<Result<Vec<_>, PqError>>()?;
        let distinct = points
            .iter()
            .map(|p| seeding::distinct_points(p, sd))
            .collect();
        Ok(TrainingSet {
            partition,
            points,
            rho,
            distinct,
            config: config.clone(),
        })
    }

    pub fn partition(&self) -> SubspacePartition {
        self.partition
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn rows(&self) -> usize {
        self.points[0].len() / self.partition.sub_dim()
    }

    /// Distinct subvectors in subspace `i`: the largest usable `k_i`.
    pub fn distinct(&self, i: usize) -> usize {
        self.distinct[i]
    }

    pub fn points(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Seeding weights of subspace `i` (`None` for plain k-means++).
    pub fn densities(&self, i: usize) -> Option<&[f64]> {
        self.rho[i].as_deref()
    }

    /// Seeds and refines subspace `i` with `k` clusters. The random stream
    /// depends only on (seed, i, k).
    pub fn train_subspace(&self, i: usize, k: usize) -> Result<TrainedSubspace, PqError> {
        let sd = self.partition.sub_dim();
        let pts = &self.points[i];
        let mut r = rng::subspace_stream(self.config.seed, i, k);
        let seeds = seeding::seed_centroids(pts, sd, k, self.rho[i].as_deref(), &mut r)?;
        let init: Vec<f64> = seeds
            .iter()
            .flat_map(|&s| pts[s * sd..(s + 1) * sd].iter().copied())
            .collect();
        Ok(TrainedSubspace {
            k,
            lloyd: lloyd::lloyd(pts, sd, init, self.config.max_iterations),
        })
    }

    /// Trains every subspace; `parallel` fans subspaces out over rayon with
    /// results identical to the sequential order.
    pub fn train_all(&self, ks: &[usize], parallel: bool) -> Result<Vec<TrainedSubspace>, PqError> {
        if ks.len() != self.partition.m() {
            return Err(PqError::WrongClusterCount {
                expected: self.partition.m(),
                found: ks.len(),
            });
        }
        if parallel {
            ks.par_iter()
                .enumerate()
                .map(|(i, &k)| self.train_subspace(i, k))
                .collect()
        } else {
            ks.iter()
                .enumerate()
                .map(|(i, &k)| self.train_subspace(i, k))
                .collect()
        }
    }

    pub fn assemble(&self, trained: &[&TrainedSubspace]) -> Codebook {
        Codebook {
            partition: self.partition,
            sub_codebooks: trained.iter().map(|t| t.lloyd.centroids.clone()).collect(),
            config: self.config.clone(),
        }
    }
}

/// Trains a codebook with `ks[i]` clusters in subspace `i`.
pub fn train(
    x: &EmbeddingMatrix,
    partition: SubspacePartition,
    ks: &[usize],
    config: &TrainingConfig,
) -> Result<Codebook, PqError> {
    train_with(x, partition, ks, config, true)
}

pub fn train_with(
    x: &EmbeddingMatrix,
    partition: SubspacePartition,
    ks: &[usize],
    config: &TrainingConfig,
    parallel: bool,
) -> Result<Codebook, PqError> {
    let set = TrainingSet::prepare(x, partition, config)?;
    let trained = set.train_all(ks, parallel)?;
    Ok(set.assemble(&trained.iter().collect::<Vec<_>>()))
}
