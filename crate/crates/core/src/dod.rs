//! Degree of distinctness and the cluster-count searches that drive it to a target.
//!
//! `D = exp(b · (1 − |W| / |Q|))` where `|W|` is the vocabulary size and `|Q|`
//! the number of distinct code tuples. `D = 1` exactly when every word has its
//! own tuple.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingMatrix;
use crate::pq::{Codebook, CodeTuple, PqError, SubspacePartition, TrainedSubspace, TrainingConfig, TrainingSet};

pub const DEFAULT_ETA: usize = 8;
pub const DEFAULT_B: f64 = 1.0;
pub const DEFAULT_MAX_ROUNDS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum DodError {
    #[error(transparent)]
    Pq(#[from] PqError),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "target distinctness {target} is unreachable: at most {max_distinct} distinct code tuples for {vocab_size} words (best {best}); duplicate embeddings: {}",
        format_groups(.duplicate_groups)
    )]
    Unreachable {
        target: f64,
        best: f64,
        max_distinct: usize,
        vocab_size: usize,
        duplicate_groups: Vec<Vec<String>>,
    },
    #[error("target distinctness {target} not reached after {rounds} rounds (last {last})")]
    RoundLimit { target: f64, rounds: usize, last: f64 },
}

fn format_groups(groups: &[Vec<String>]) -> String {
    if groups.is_empty() {
        return "none".into();
    }
    groups
        .iter()
        .map(|g| format!("{{{}}}", g.join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `exp(b · (1 − |W|/|Q|))`.
pub fn dod_value(vocab_size: usize, distinct: usize, b: f64) -> f64 {
    (b * (1.0 - vocab_size as f64 / distinct as f64)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DodReport {
    pub distinct_codewords: usize,
    pub vocab_size: usize,
    pub b: f64,
    pub value: f64,
}

impl DodReport {
    pub fn new(vocab_size: usize, distinct_codewords: usize, b: f64) -> Self {
        DodReport {
            distinct_codewords,
            vocab_size,
            b,
            value: dod_value(vocab_size, distinct_codewords, b),
        }
    }

    pub fn from_tuples<'a, I>(tuples: I, b: f64) -> Self
    where
        I: IntoIterator<Item = &'a CodeTuple>,
    {
        let mut n = 0;
        let mut set = HashSet::new();
        for t in tuples {
            n += 1;
            set.insert(t);
        }
        DodReport::new(n, set.len(), b)
    }

    pub fn is_reversible(&self) -> bool {
        self.distinct_codewords == self.vocab_size
    }
}

impl fmt::Display for DodReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DoD={} (|Q|={}, |W|={}, b={})",
            self.value, self.distinct_codewords, self.vocab_size, self.b
        )
    }
}

/// Distinctness of the codes `cb` assigns to the rows of `x`.
pub fn degree_of_distinctness(cb: &Codebook, x: &EmbeddingMatrix, b: f64) -> Result<DodReport, PqError> {
    let tuples = cb.quantize_all(x)?;
    Ok(DodReport::from_tuples(&tuples, b))
}

/// `|W| / Σ k_i`: how many vocabulary entries each codebook entry replaces.
pub fn vocab_reduction(vocab_size: usize, ks: &[usize]) -> f64 {
    vocab_size as f64 / ks.iter().sum::<usize>() as f64
}

/// Smallest `k` with `k^m ≥ n`, i.e. `⌈n^(1/m)⌉` without floating-point error.
pub fn initial_k(n: usize, m: usize) -> usize {
    assert!(m >= 1);
    if n <= 1 {
        return 1;
    }
    let reaches = |k: usize| {
        let mut p: u128 = 1;
        for _ in 0..m {
            p = p.saturating_mul(k as u128);
            if p >= n as u128 {
                return true;
            }
        }
        p >= n as u128
    };
    let guess = (n as f64).powf(1.0 / m as f64).ceil() as usize;
    let mut k = guess.saturating_sub(2).max(1);
    while !reaches(k) {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStrategy {
    /// One `k` shared by all subspaces, grown by `eta` per round.
    #[default]
    Uniform,
    /// Grow the single subspace whose increment raises distinctness most.
    PerSubspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub target: f64,
    pub eta: usize,
    pub b: f64,
    pub max_rounds: usize,
    pub strategy: SearchStrategy,
    /// Train subspaces on the rayon pool.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            target: 1.0,
            eta: DEFAULT_ETA,
            b: DEFAULT_B,
            max_rounds: DEFAULT_MAX_ROUNDS,
            strategy: SearchStrategy::Uniform,
            parallel: true,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<(), DodError> {
        if !(self.target > 0.0 && self.target <= 1.0) {
            return Err(DodError::InvalidConfig(format!(
                "target must lie in (0, 1], got {}",
                self.target
            )));
        }
        if self.eta == 0 {
            return Err(DodError::InvalidConfig("eta must be at least 1".into()));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(DodError::InvalidConfig(format!("b must be positive, got {}", self.b)));
        }
        if self.max_rounds == 0 {
            return Err(DodError::InvalidConfig("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// One trained configuration visited by a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: usize,
    pub ks: Vec<usize>,
    pub distinct: usize,
    pub dod: f64,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.ks.iter().map(|k| k.to_string()).collect();
        write!(f, "{}\t{}\t{}\t{}", self.round, ks.join(","), self.distinct, self.dod)
    }
}

pub const TRACE_HEADER: &str = "round\tks\tdistinct\tdod";

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub codebook: Codebook,
    pub report: DodReport,
    pub trace: Vec<TraceEntry>,
}

fn count_distinct(trained: &[&TrainedSubspace]) -> usize {
    let n = trained[0].lloyd.assignments.len();
    let mut set: HashSet<Vec<u32>> = HashSet::with_capacity(n);
    for row in 0..n {
        set.insert(trained.iter().map(|t| t.lloyd.assignments[row]).collect());
    }
    set.len()
}

/// Groups of words whose embedding rows are bit-identical.
pub fn duplicate_rows(x: &EmbeddingMatrix) -> Vec<Vec<String>> {
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for (i, row) in x.iter_rows().enumerate() {
        let key: Vec<u64> = row
            .iter()
            .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
            .collect();
        let entry = groups.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(i);
    }
    order
        .into_iter()
        .filter_map(|k| {
            let g = &groups[&k];
            (g.len() > 1).then(|| g.iter().map(|&i| x.word(i).to_owned()).collect())
        })
        .collect()
}

struct Search<'a> {
    x: &'a EmbeddingMatrix,
    set: TrainingSet,
    cfg: &'a SearchConfig,
    cache: HashMap<(usize, usize), TrainedSubspace>,
}

impl<'a> Search<'a> {
    fn new(
        x: &'a EmbeddingMatrix,
        m: usize,
        cfg: &'a SearchConfig,
        training: &TrainingConfig,
    ) -> Result<Self, DodError> {
        cfg.validate()?;
        let partition = SubspacePartition::new(x.dim(), m)?;
        let set = TrainingSet::prepare(x, partition, training)?;
        let search = Search {
            x,
            set,
            cfg,
            cache: HashMap::new(),
        };
        search.check_reachable()?;
        Ok(search)
    }

    fn vocab_size(&self) -> usize {
        self.x.rows()
    }

    /// Once every subspace has as many clusters as distinct subvectors the
    /// tuples separate exactly the distinct rows, so that count bounds |Q|.
    fn check_reachable(&self) -> Result<(), DodError> {
        let dups = duplicate_rows(self.x);
        let max_distinct = self.vocab_size() - dups.iter().map(|g| g.len() - 1).sum::<usize>();
        let best = dod_value(self.vocab_size(), max_distinct, self.cfg.b);
        if best < self.cfg.target {
            return Err(self.unreachable(best, max_distinct, dups));
        }
        Ok(())
    }

    fn unreachable(&self, best: f64, max_distinct: usize, dups: Vec<Vec<String>>) -> DodError {
        DodError::Unreachable {
            target: self.cfg.target,
            best,
            max_distinct,
            vocab_size: self.vocab_size(),
            duplicate_groups: dups,
        }
    }

    fn cap(&self, i: usize, k: usize) -> usize {
        k.min(self.set.distinct(i))
    }

    fn ensure(&mut self, items: &[(usize, usize)]) -> Result<(), PqError> {
        let missing: Vec<(usize, usize)> = items
            .iter()
            .copied()
            .filter(|key| !self.cache.contains_key(key))
            .collect();
        let set = &self.set;
        let trained: Vec<TrainedSubspace> = if self.cfg.parallel {
            use rayon::prelude::*;
            missing
                .par_iter()
                .map(|&(i, k)| set.train_subspace(i, k))
                .collect::<Result<_, _>>()?
        } else {
            missing
                .iter()
                .map(|&(i, k)| set.train_subspace(i, k))
                .collect::<Result<_, _>>()?
        };
        for (key, t) in missing.into_iter().zip(trained) {
            self.cache.insert(key, t);
        }
        Ok(())
    }

    fn evaluate(&self, ks: &[usize]) -> usize {
        let trained: Vec<&TrainedSubspace> = ks
            .iter()
            .enumerate()
            .map(|(i, &k)| &self.cache[&(i, k)])
            .collect();
        count_distinct(&trained)
    }

    fn finish(&self, ks: &[usize], trace: Vec<TraceEntry>) -> FitOutcome {
        let trained: Vec<&TrainedSubspace> = ks
            .iter()
            .enumerate()
            .map(|(i, &k)| &self.cache[&(i, k)])
            .collect();
        let distinct = count_distinct(&trained);
        FitOutcome {
            codebook: self.set.assemble(&trained),
            report: DodReport::new(self.vocab_size(), distinct, self.cfg.b),
            trace,
        }
    }

    fn entry(&self, round: usize, ks: &[usize], distinct: usize) -> TraceEntry {
        TraceEntry {
            round,
            ks: ks.to_vec(),
            distinct,
            dod: dod_value(self.vocab_size(), distinct, self.cfg.b),
        }
    }

    fn at_capacity(&self, ks: &[usize]) -> bool {
        ks.iter().enumerate().all(|(i, &k)| k >= self.set.distinct(i))
    }

    fn fail_at_capacity(&self, distinct: usize) -> DodError {
        let best = dod_value(self.vocab_size(), distinct, self.cfg.b);
        self.unreachable(best, distinct, duplicate_rows(self.x))
    }

    fn run_uniform(&mut self) -> Result<FitOutcome, DodError> {
        let m = self.set.partition().m();
        let mut k = initial_k(self.vocab_size(), m);
        let mut trace = Vec::new();
        for round in 0..self.cfg.max_rounds {
            let ks: Vec<usize> = (0..m).map(|i| self.cap(i, k)).collect();
            let keys: Vec<(usize, usize)> = ks.iter().copied().enumerate().collect();
            self.ensure(&keys)?;
            let distinct = self.evaluate(&ks);
            let e = self.entry(round, &ks, distinct);
            let dod = e.dod;
            trace.push(e);
            if dod >= self.cfg.target {
                return Ok(self.finish(&ks, trace));
            }
            if self.at_capacity(&ks) {
                return Err(self.fail_at_capacity(distinct));
            }
            // only the previous round's sub-codebooks can be reused
            self.cache.retain(|&(i, kk), _| kk == ks[i]);
            k += self.cfg.eta;
        }
        Err(DodError::RoundLimit {
            target: self.cfg.target,
            rounds: self.cfg.max_rounds,
            last: trace.last().map_or(0.0, |e| e.dod),
        })
    }

    fn run_per_subspace(&mut self) -> Result<FitOutcome, DodError> {
        let m = self.set.partition().m();
        let k0 = initial_k(self.vocab_size(), m);
        let mut ks: Vec<usize> = (0..m).map(|i| self.cap(i, k0)).collect();
        let keys: Vec<(usize, usize)> = ks.iter().copied().enumerate().collect();
        self.ensure(&keys)?;
        let mut distinct = self.evaluate(&ks);
        let mut trace = vec![self.entry(0, &ks, distinct)];
        let mut round = 0;
        while trace.last().unwrap().dod < self.cfg.target {
            round += 1;
            if round >= self.cfg.max_rounds {
                return Err(DodError::RoundLimit {
                    target: self.cfg.target,
                    rounds: self.cfg.max_rounds,
                    last: trace.last().unwrap().dod,
                });
            }
            if self.at_capacity(&ks) {
                return Err(self.fail_at_capacity(distinct));
            }
            let probes: Vec<(usize, usize)> = (0..m)
                .filter(|&i| ks[i] < self.set.distinct(i))
                .map(|i| (i, self.cap(i, ks[i] + self.cfg.eta)))
                .collect();
            self.ensure(&probes)?;
            // argmax of the probed distinctness, lowest subspace on ties
            let mut best: Option<(usize, usize, usize)> = None;
            for &(i, k) in &probes {
                let mut cand = ks.clone();
                cand[i] = k;
                let d = self.evaluate(&cand);
                if best.is_none_or(|(_, _, bd)| d > bd) {
                    best = Some((i, k, d));
                }
            }
            let (i, k, d) = best.expect("at least one subspace below capacity");
            let old = ks[i];
            ks[i] = k;
            distinct = d;
            self.cache.remove(&(i, old));
            trace.push(self.entry(round, &ks, distinct));
        }
        Ok(self.finish(&ks, trace))
    }
}

/// Grows a shared `k` from `⌈|X|^(1/m)⌉` in steps of `eta` until the target is met.
pub fn fit_uniform(
    x: &EmbeddingMatrix,
    m: usize,
    cfg: &SearchConfig,
    training: &TrainingConfig,
) -> Result<FitOutcome, DodError> {
    Search::new(x, m, cfg, training)?.run_uniform()
}

/// Coordinate-wise search: each round grows the one subspace whose `+eta`
/// probe yields the highest distinctness.
pub fn fit_per_subspace(
    x: &EmbeddingMatrix,
    m: usize,
    cfg: &SearchConfig,
    training: &TrainingConfig,
) -> Result<FitOutcome, DodError> {
    Search::new(x, m, cfg, training)?.run_per_subspace()
}

/// Dispatches on `cfg.strategy`.
pub fn fit(
    x: &EmbeddingMatrix,
    m: usize,
    cfg: &SearchConfig,
    training: &TrainingConfig,
) -> Result<FitOutcome, DodError> {
    match cfg.strategy {
        SearchStrategy::Uniform => fit_uniform(x, m, cfg, training),
        SearchStrategy::PerSubspace => fit_per_subspace(x, m, cfg, training),
    }
}
