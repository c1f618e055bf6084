//! Corpus ingestion, word frequencies and the frequent/infrequent split.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::codec::SymbolTable;

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
}

/// Words of a corpus with their occurrence counts.
///
/// Word indices are dense and assigned in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total_tokens: u64,
}

/// Outcome of comparing a word's relative frequency to the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordClass {
    Frequent,
    Infrequent,
}

/// Whitespace tokenization used everywhere in the crate.
pub fn tokenize(line: &str) -> impl Iterator<Item = &str> {
    line.split_whitespace()
}

/// Builds a vocabulary from whitespace-tokenized sentences.
pub fn ingest_corpus<I, S>(lines: I) -> Result<Vocabulary, VocabError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut vocab = Vocabulary {
        words: Vec::new(),
        counts: Vec::new(),
        index: HashMap::new(),
        total_tokens: 0,
    };
    for line in lines {
        for token in tokenize(line.as_ref()) {
            vocab.add(token);
        }
    }
    if vocab.total_tokens == 0 {
        return Err(VocabError::EmptyCorpus);
    }
    Ok(vocab)
}

impl Vocabulary {
    /// Builds a vocabulary from explicit `(word, count)` pairs, in the given order.
    /// Zero counts are dropped and repeated words are merged.
    pub fn from_counts<I, S>(entries: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary {
            words: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
            total_tokens: 0,
        };
        for (word, count) in entries {
            if count == 0 {
                continue;
            }
            let word = word.into();
            let idx = match vocab.index.get(&word) {
                Some(&i) => i,
                None => vocab.push_word(word),
            };
            vocab.counts[idx] += count;
            vocab.total_tokens += count;
        }
        if vocab.total_tokens == 0 {
            return Err(VocabError::EmptyCorpus);
        }
        Ok(vocab)
    }

    fn push_word(&mut self, word: String) -> usize {
        let idx = self.words.len();
        self.index.insert(word.clone(), idx);
        self.words.push(word);
        self.counts.push(0);
        idx
    }

    fn add(&mut self, token: &str) {
        let idx = match self.index.get(token) {
            Some(&i) => i,
            None => self.push_word(token.to_owned()),
        };
        self.counts[idx] += 1;
        self.total_tokens += 1;
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.index_of(word).map(|i| self.counts[i])
    }

    pub fn count_at(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn frequency(&self, word: &str) -> Option<f64> {
        self.index_of(word).map(|i| self.frequency_at(i))
    }

    /// Occurrences divided by the total number of tokens.
    pub fn frequency_at(&self, idx: usize) -> f64 {
        self.counts[idx] as f64 / self.total_tokens as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.frequency_at(i)).collect()
    }

    /// Word indices ordered by descending count; ties keep first-appearance order.
    pub fn rank_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        order
    }

    /// Median of the per-word relative frequencies (lower median for even sizes).
    pub fn median_frequency(&self) -> f64 {
        let mut counts = self.counts.clone();
        counts.sort_unstable();
        counts[(counts.len() - 1) / 2] as f64 / self.total_tokens as f64
    }

    /// Frequent iff the word's frequency is strictly larger than `f_ct`.
    pub fn classify_word(&self, word: &str, f_ct: f64) -> Result<WordClass, VocabError> {
        let freq = self
            .frequency(word)
            .ok_or_else(|| VocabError::UnknownWord(word.to_owned()))?;
        Ok(classify_frequency(freq, f_ct))
    }
}

pub fn classify_frequency(frequency: f64, f_ct: f64) -> WordClass {
    if frequency > f_ct {
        WordClass::Frequent
    } else {
        WordClass::Infrequent
    }
}

/// Token-level statistics of a (possibly encoded) corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub distinct_token_count: usize,
    pub avg_sentence_length: f64,
    pub sentence_count: usize,
    pub token_count: usize,
}

impl CorpusStats {
    pub fn from_lines<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut distinct: HashSet<String> = HashSet::new();
        let mut sentences = 0usize;
        let mut tokens = 0usize;
        for line in lines {
            sentences += 1;
            for tok in tokenize(line.as_ref()) {
                tokens += 1;
                if !distinct.contains(tok) {
                    distinct.insert(tok.to_owned());
                }
            }
        }
        CorpusStats {
            distinct_token_count: distinct.len(),
            avg_sentence_length: if sentences == 0 {
                0.0
            } else {
                tokens as f64 / sentences as f64
            },
            sentence_count: sentences,
            token_count: tokens,
        }
    }
}

/// Statistics of `lines`, or of their encoding under `table` at cutoff `f_ct`
/// when an encoding is supplied.
pub fn corpus_stats<S: AsRef<str>>(
    lines: &[S],
    encoding: Option<(&SymbolTable, f64)>,
) -> Result<CorpusStats, crate::codec::CodecError> {
    match encoding {
        None => Ok(CorpusStats::from_lines(lines)),
        Some((table, f_ct)) => {
            let encoded = lines
                .iter()
                .map(|l| table.encode_line(l.as_ref(), f_ct))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CorpusStats::from_lines(&encoded))
        }
    }
}
