//! Word ↔ code-tuple table and corpus encoding.

use std::collections::HashMap;

use super::symbols::{self, PREFIXES};
use super::CodecError;
use crate::embedding::EmbeddingMatrix;
use crate::pq::{CodeTuple, Codebook};
use crate::vocab::{classify_frequency, tokenize, Vocabulary, WordClass};

/// Code tuple of every vocabulary word plus the reverse map for tuples
/// that belong to exactly one word.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    prefixes: Vec<char>,
    ks: Vec<usize>,
    words: Vec<String>,
    codes: Vec<CodeTuple>,
    frequencies: Vec<f64>,
    word_index: HashMap<String, usize>,
    unique: HashMap<CodeTuple, usize>,
}

impl SymbolTable {
    /// Quantizes the embedding of every word in `vocab`.
    pub fn build(vocab: &Vocabulary, cb: &Codebook, x: &EmbeddingMatrix) -> Result<Self, CodecError> {
        let aligned = x.words() == vocab.words();
        let rows: HashMap<&str, usize> = if aligned {
            HashMap::new()
        } else {
            x.words().iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect()
        };
        let mut codes = Vec::with_capacity(vocab.len());
        for (i, word) in vocab.words().iter().enumerate() {
            let row = if aligned {
                i
            } else {
                *rows
                    .get(word.as_str())
                    .ok_or_else(|| CodecError::MissingEmbedding(word.clone()))?
            };
            codes.push(cb.quantize(x.row(row))?);
        }
        Self::from_parts(cb.ks(), vocab.words().to_vec(), codes, vocab.frequencies())
    }

    pub fn from_parts(
        ks: Vec<usize>,
        words: Vec<String>,
        codes: Vec<CodeTuple>,
        frequencies: Vec<f64>,
    ) -> Result<Self, CodecError> {
        let m = ks.len();
        if m == 0 || m > symbols::MAX_SUBSPACES {
            return Err(CodecError::TooManySubspaces(m));
        }
        if words.len() != codes.len() || words.len() != frequencies.len() {
            return Err(CodecError::Inconsistent(
                "words, codes and frequencies differ in length".into(),
            ));
        }
        let mut word_index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if word_index.insert(w.clone(), i).is_some() {
                return Err(CodecError::Inconsistent(format!("duplicate word {w:?}")));
            }
        }
        let mut owners: HashMap<CodeTuple, Option<usize>> = HashMap::with_capacity(codes.len());
        for (i, t) in codes.iter().enumerate() {
            if t.len() != m || t.indices().iter().zip(&ks).any(|(&j, &k)| j as usize >= k) {
                return Err(CodecError::Inconsistent(format!(
                    "code {t} of {:?} does not fit cluster counts {ks:?}",
                    words[i]
                )));
            }
            owners
                .entry(t.clone())
                .and_modify(|o| *o = None)
                .or_insert(Some(i));
        }
        let unique = owners
            .into_iter()
            .filter_map(|(t, o)| o.map(|i| (t, i)))
            .collect();
        Ok(SymbolTable {
            prefixes: PREFIXES[..m].to_vec(),
            ks,
            words,
            codes,
            frequencies,
            word_index,
            unique,
        })
    }

    pub fn m(&self) -> usize {
        self.ks.len()
    }

    pub fn prefixes(&self) -> &[char] {
        &self.prefixes
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn codes(&self) -> &[CodeTuple] {
        &self.codes
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.word_index.get(word).copied()
    }

    pub fn tuple_of(&self, word: &str) -> Option<&CodeTuple> {
        self.index_of(word).map(|i| &self.codes[i])
    }

    /// The word owning `t`, when exactly one word does.
    pub fn word_for(&self, t: &CodeTuple) -> Option<usize> {
        self.unique.get(t).copied()
    }

    /// True when every word has its own tuple.
    pub fn is_injective(&self) -> bool {
        self.unique.len() == self.words.len()
    }

    pub fn classify(&self, word: &str, f_ct: f64) -> Option<WordClass> {
        self.index_of(word)
            .map(|i| classify_frequency(self.frequencies[i], f_ct))
    }

    /// Appends the encoding of one raw token: its symbols when infrequent,
    /// otherwise the (escaped) token itself.
    pub fn encode_token(&self, tok: &str, f_ct: f64, out: &mut Vec<String>) -> Result<(), CodecError> {
        let idx = self
            .index_of(tok)
            .ok_or_else(|| CodecError::UnknownWord(tok.to_owned()))?;
        match classify_frequency(self.frequencies[idx], f_ct) {
            WordClass::Frequent => out.push(symbols::escape(tok).into_owned()),
            WordClass::Infrequent => out.extend(symbols::format_symbols(&self.codes[idx], &self.prefixes)),
        }
        Ok(())
    }

    pub fn encode_line(&self, line: &str, f_ct: f64) -> Result<String, CodecError> {
        let mut out = Vec::new();
        for tok in tokenize(line) {
            self.encode_token(tok, f_ct, &mut out)?;
        }
        Ok(out.join(" "))
    }
}
