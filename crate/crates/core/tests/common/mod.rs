//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use logoquant::codec::{CodecModel, SymbolTable};
use logoquant::dod::{self, FitOutcome};
use logoquant::embedding::{synthesize_embeddings, EmbeddingMatrix};
use logoquant::pq::CodeTuple;
use logoquant::vocab::{ingest_corpus, Vocabulary};
use logoquant::{synth, EncoderConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub lines: Vec<String>,
    pub vocab: Vocabulary,
    pub x: EmbeddingMatrix,
    pub fit: FitOutcome,
    pub model: CodecModel,
}

/// Synthetic corpus, 6-dim synthetic embeddings and a codebook fitted to full distinctness.
pub fn fixture(words: usize, sentences: usize, seed: u64) -> Fixture {
    let lines = synth::zipf_corpus(words, sentences, seed);
    let vocab = ingest_corpus(&lines).unwrap();
    let x = synthesize_embeddings(&vocab, 6, seed).unwrap();
    let cfg = EncoderConfig { seed, ..EncoderConfig::default() };
    let fit = dod::fit(&x, cfg.m, &cfg.search(), &cfg.training()).unwrap();
    let table = SymbolTable::build(&vocab, &fit.codebook, &x).unwrap();
    let model = CodecModel::new(fit.codebook.clone(), table).unwrap();
    Fixture { lines, vocab, x, fit, model }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> EmbeddingMatrix {
    let data: Vec<f64> = (0..rows * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let words = (0..rows).map(|i| format!("w{i}")).collect();
    EmbeddingMatrix::new(dim, data, words)
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force nearest word to `tuple` over reconstructions of every word's
/// code; ties to higher frequency then smaller word.
pub fn oracle_nearest(model: &CodecModel, tuple: &CodeTuple) -> String {
    let cb = &model.codebook;
    let q = cb.reconstruct(tuple).unwrap();
    let t = &model.table;
    let mut best: Option<(f64, f64, &str)> = None;
    for (w, code) in t.codes().iter().enumerate() {
        let d = sq(&q, &cb.reconstruct(code).unwrap());
        let cand = (d, t.frequencies()[w], t.word(w));
        best = match best {
            None => Some(cand),
            Some(b) => {
                let better = cand.0 < b.0
                    || (cand.0 == b.0 && (cand.1 > b.1 || (cand.1 == b.1 && cand.2 < b.2)));
                Some(if better { cand } else { b })
            }
        };
    }
    best.unwrap().2.to_owned()
}
