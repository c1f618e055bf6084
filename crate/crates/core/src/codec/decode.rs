//! Symbol stream → words, with nearest-codeword recovery for tuples that do
//! not name exactly one word.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::symbols::{self, SymbolError};
use super::table::SymbolTable;
use super::CodecError;
use crate::embedding::EmbeddingMatrix;
use crate::pq::{CodeTuple, Codebook};

/// Replacement emitted for unparseable symbol groups in lenient mode.
pub const UNK: &str = "⟨UNK⟩";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("token {position}: stream ends inside a symbol group ({found} of {expected} symbols)")]
    DanglingGroup {
        position: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

impl DecodeError {
    pub fn position(&self) -> usize {
        match self {
            DecodeError::DanglingGroup { position, .. } => *position,
            DecodeError::Symbol(
                SymbolError::WrongArity { position, .. }
                | SymbolError::WrongPrefixOrder { position, .. }
                | SymbolError::OutOfRangeIndex { position, .. }
                | SymbolError::NonNumericPayload { position, .. },
            ) => *position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// A raw (possibly escaped) word token.
    Raw,
    /// A symbol group naming exactly one word.
    Exact,
    /// A symbol group resolved by nearest-neighbour search.
    Recovered,
    /// A malformed group replaced by [`UNK`] (lenient mode only).
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedWord {
    pub word: String,
    pub outcome: Outcome,
}

/// Where nearest-neighbour recovery measures distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoverySpace {
    /// Between codebook reconstructions of the tuples.
    #[default]
    Codeword,
    /// Between the query reconstruction and the words' original embeddings.
    Embedding,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub raw: usize,
    pub exact: usize,
    pub recovered: usize,
    pub errors: usize,
}

impl DecodeReport {
    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Raw => self.raw += 1,
            Outcome::Exact => self.exact += 1,
            Outcome::Recovered => self.recovered += 1,
            Outcome::Error => self.errors += 1,
        }
    }

    pub fn merge(&mut self, other: &DecodeReport) {
        self.raw += other.raw;
        self.exact += other.exact;
        self.recovered += other.recovered;
        self.errors += other.errors;
    }

    pub fn all_exact(&self) -> bool {
        self.recovered == 0 && self.errors == 0
    }
}

impl std::fmt::Display for DecodeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.all_exact() {
            write!(f, "exact: all ({} symbol groups, {} raw tokens)", self.exact, self.raw)
        } else {
            write!(
                f,
                "exact: {} recovered: {} errors: {} raw: {}",
                self.exact, self.recovered, self.errors, self.raw
            )
        }
    }
}

/// Decoder over a table and the codebook it was built from.
#[derive(Debug)]
pub struct Decoder<'a> {
    table: &'a SymbolTable,
    cb: &'a Codebook,
    /// Row-major per-word target vectors searched during recovery.
    targets: Vec<f64>,
}

impl<'a> Decoder<'a> {
    /// Recovery in codeword space.
    pub fn new(table: &'a SymbolTable, cb: &'a Codebook) -> Result<Self, CodecError> {
        check_consistent(table, cb)?;
        let mut targets = Vec::with_capacity(table.len() * cb.dim());
        for t in table.codes() {
            targets.extend(cb.reconstruct(t)?);
        }
        Ok(Decoder { table, cb, targets })
    }

    /// Recovery against the original embeddings of the table's words.
    pub fn with_embeddings(
        table: &'a SymbolTable,
        cb: &'a Codebook,
        x: &EmbeddingMatrix,
    ) -> Result<Self, CodecError> {
        check_consistent(table, cb)?;
        if x.dim() != cb.dim() {
            return Err(CodecError::Inconsistent(format!(
                "embedding dimension {} does not match codebook dimension {}",
                x.dim(),
                cb.dim()
            )));
        }
        let rows: std::collections::HashMap<&str, usize> =
            x.words().iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
        let mut targets = Vec::with_capacity(table.len() * cb.dim());
        for w in table.words() {
            let r = rows
                .get(w.as_str())
                .ok_or_else(|| CodecError::MissingEmbedding(w.clone()))?;
            targets.extend_from_slice(x.row(*r));
        }
        Ok(Decoder { table, cb, targets })
    }

    pub fn space_dim(&self) -> usize {
        self.cb.dim()
    }

    /// Nearest word to the partial tuple `query`; `None` entries (invalid
    /// indices) are left out of the distance. Ties go to the more frequent
    /// word, then to the lexicographically smaller one.
    pub fn recover(&self, query: &[Option<u32>]) -> usize {
        let p = self.cb.partition();
        let sd = p.sub_dim();
        let dim = p.dim();
        let mut q = vec![0.0; dim];
        let mut active = vec![false; dim];
        for (i, j) in query.iter().enumerate() {
            if let Some(j) = j {
                q[p.range(i)].copy_from_slice(self.cb.centroid(i, *j as usize));
                active[i * sd..(i + 1) * sd].fill(true);
            }
        }
        let freqs = self.table.frequencies();
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (w, target) in self.targets.chunks_exact(dim).enumerate() {
            let mut d = 0.0;
            for c in 0..dim {
                if active[c] {
                    let diff = q[c] - target[c];
                    d += diff * diff;
                }
            }
            let better = match d.partial_cmp(&best_d).unwrap_or(Ordering::Greater) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => match freqs[w].partial_cmp(&freqs[best]).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => self.table.word(w) < self.table.word(best),
                },
            };
            if better {
                best = w;
                best_d = d;
            }
        }
        best
    }

    fn resolve(&self, query: Vec<Option<u32>>) -> DecodedWord {
        if query.iter().all(Option::is_some) {
            let t = CodeTuple(query.iter().map(|j| j.unwrap()).collect());
            if let Some(w) = self.table.word_for(&t) {
                return DecodedWord {
                    word: self.table.word(w).to_owned(),
                    outcome: Outcome::Exact,
                };
            }
        }
        DecodedWord {
            word: self.table.word(self.recover(&query)).to_owned(),
            outcome: Outcome::Recovered,
        }
    }

    /// Reads one symbol group starting at `start`; returns the tuple (with
    /// out-of-range entries as `None`) and the index after the group.
    fn read_group(&self, tokens: &[&str], start: usize) -> Result<(Vec<Option<u32>>, usize), DecodeError> {
        let m = self.table.m();
        let prefixes = self.table.prefixes();
        let ks = self.table.ks();
        let mut query = Vec::with_capacity(m);
        for d in 0..m {
            let pos = start + d;
            let Some(tok) = tokens.get(pos) else {
                return Err(DecodeError::DanglingGroup {
                    position: tokens.len() - 1,
                    expected: m,
                    found: d,
                });
            };
            let Some((p, index)) = symbols::symbol_parts(tok) else {
                return Err(SymbolError::WrongArity {
                    position: pos,
                    expected: m,
                    found: d,
                }
                .into());
            };
            if p != prefixes[d] {
                return Err(SymbolError::WrongPrefixOrder {
                    position: pos,
                    expected: prefixes[d],
                    found: (*tok).to_owned(),
                }
                .into());
            }
            query.push((index < ks[d] as u64).then_some(index as u32));
        }
        Ok((query, start + m))
    }

    fn scan(&self, tokens: &[&str], lenient: bool) -> Result<Vec<DecodedWord>, DecodeError> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let tok = tokens[i];
            if tok.starts_with(symbols::ESCAPE) || !symbols::is_symbol(tok) {
                out.push(DecodedWord {
                    word: symbols::unescape(tok).to_owned(),
                    outcome: Outcome::Raw,
                });
                i += 1;
                continue;
            }
            match self.read_group(tokens, i) {
                Ok((query, next)) => {
                    out.push(self.resolve(query));
                    i = next;
                }
                Err(e) if lenient => {
                    out.push(DecodedWord {
                        word: UNK.to_owned(),
                        outcome: Outcome::Error,
                    });
                    // resume at the offending token unless it opened the group
                    i = match &e {
                        DecodeError::DanglingGroup { .. } => tokens.len(),
                        _ => e.position().max(i + 1),
                    };
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Strict decoding: the first malformed group is an error.
    pub fn decode_tokens(&self, tokens: &[&str]) -> Result<Vec<DecodedWord>, DecodeError> {
        self.scan(tokens, false)
    }

    /// Lenient decoding: malformed groups become [`UNK`].
    pub fn decode_tokens_lenient(&self, tokens: &[&str]) -> Vec<DecodedWord> {
        self.scan(tokens, true).expect("lenient decoding never fails")
    }
}

fn check_consistent(table: &SymbolTable, cb: &Codebook) -> Result<(), CodecError> {
    if table.ks() != cb.ks().as_slice() {
        return Err(CodecError::Inconsistent(format!(
            "symbol table cluster counts {:?} differ from codebook {:?}",
            table.ks(),
            cb.ks()
        )));
    }
    Ok(())
}

/// Strict decoding of one token stream.
pub fn decode_tokens(
    tokens: &[&str],
    table: &SymbolTable,
    cb: &Codebook,
) -> Result<Vec<DecodedWord>, CodecError> {
    Decoder::new(table, cb)?
        .decode_tokens(tokens)
        .map_err(|source| CodecError::Decode { line: 1, source })
}
