//! Words ↔ abstract-subword symbols.
//!
//! Infrequent words are replaced by `m` prefixed symbols (`@25 $814 &778`),
//! frequent words pass through, escaped if they look like a symbol. Encoded
//! corpora carry a `#lqc <checksum>` header tying them to the model that
//! produced them.

pub mod decode;
pub mod persist;
pub mod symbols;
pub mod table;

use thiserror::Error;

use crate::embedding::EmbeddingMatrix;
use crate::pq::{Codebook, PqError};
use crate::vocab::{tokenize, Vocabulary};

pub use decode::{decode_tokens, DecodeError, DecodeReport, DecodedWord, Decoder, Outcome, RecoverySpace, UNK};
pub use persist::{load_codebook, save_codebook, CodecModel, PersistError};
pub use symbols::{format_symbols, parse_symbols, SymbolError, PREFIXES};
pub use table::SymbolTable;

pub const HEADER_TAG: &str = "#lqc";

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("no embedding for word {0:?}")]
    MissingEmbedding(String),
    #[error("word {0:?} is not in the symbol table")]
    UnknownWord(String),
    #[error("{0} subspaces requested; between 1 and 8 are supported")]
    TooManySubspaces(usize),
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
    #[error("encoded corpus was produced by model {found}, expected {expected}")]
    HeaderMismatch { expected: String, found: String },
    #[error("line {line}: {source}")]
    Decode { line: usize, source: DecodeError },
    #[error(transparent)]
    Pq(#[from] PqError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// Encoded sentences plus the checksum of the model that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCorpus {
    pub checksum: Option<String>,
    pub lines: Vec<String>,
}

impl EncodedCorpus {
    /// Header line (when a checksum is present) followed by the sentences.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(sum) = &self.checksum {
            out.push_str(HEADER_TAG);
            out.push(' ');
            out.push_str(sum);
            out.push('\n');
        }
        out.push_str(&self.lines.join("\n"));
        out
    }

    /// Splits an optional first-line header from the sentences. Only line 1
    /// can be a header; every other line is data.
    pub fn parse(text: &str) -> Self {
        let (checksum, body) = match text.split_once('\n') {
            Some((first, rest)) if first.starts_with("#lqc ") => {
                (Some(first[HEADER_TAG.len() + 1..].trim().to_owned()), rest)
            }
            None if text.starts_with("#lqc ") => (Some(text[HEADER_TAG.len() + 1..].trim().to_owned()), ""),
            _ => (None, text),
        };
        EncodedCorpus {
            checksum,
            lines: body.split('\n').map(str::to_owned).collect(),
        }
    }
}

/// Quantizes the vocabulary, builds its symbol table and rewrites `lines`
/// with every word of frequency `≤ f_ct` decomposed into symbols.
pub fn encode_corpus<S: AsRef<str>>(
    lines: &[S],
    vocab: &Vocabulary,
    cb: &Codebook,
    x: &EmbeddingMatrix,
    f_ct: f64,
) -> Result<(EncodedCorpus, SymbolTable), CodecError> {
    let table = SymbolTable::build(vocab, cb, x)?;
    let model = CodecModel::new(cb.clone(), table)?;
    let encoded = encode_with(&model, lines, f_ct)?;
    Ok((encoded, model.table))
}

/// Encodes with an existing model.
pub fn encode_with<S: AsRef<str>>(model: &CodecModel, lines: &[S], f_ct: f64) -> Result<EncodedCorpus, CodecError> {
    let lines = lines
        .iter()
        .map(|l| model.table.encode_line(l.as_ref(), f_ct))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncodedCorpus {
        checksum: Some(model.checksum()),
        lines,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedCorpus {
    pub lines: Vec<String>,
    pub outcomes: Vec<Vec<Outcome>>,
    pub report: DecodeReport,
}

impl DecodedCorpus {
    pub fn to_text(&self) -> String {
        self.lines.join("\n")
    }
}

/// Decodes every line of `corpus`; a header, when present, must match `decoder`'s model.
pub fn decode_corpus(
    corpus: &EncodedCorpus,
    model_checksum: &str,
    decoder: &Decoder<'_>,
    lenient: bool,
) -> Result<DecodedCorpus, CodecError> {
    if let Some(sum) = &corpus.checksum {
        if sum != model_checksum {
            return Err(CodecError::HeaderMismatch {
                expected: model_checksum.to_owned(),
                found: sum.clone(),
            });
        }
    }
    let mut lines = Vec::with_capacity(corpus.lines.len());
    let mut outcomes = Vec::with_capacity(corpus.lines.len());
    let mut report = DecodeReport::default();
    for (n, line) in corpus.lines.iter().enumerate() {
        let tokens: Vec<&str> = tokenize(line).collect();
        let words = if lenient {
            decoder.decode_tokens_lenient(&tokens)
        } else {
            decoder
                .decode_tokens(&tokens)
                .map_err(|source| CodecError::Decode { line: n + 1, source })?
        };
        for w in &words {
            report.add(w.outcome);
        }
        outcomes.push(words.iter().map(|w| w.outcome).collect());
        lines.push(words.into_iter().map(|w| w.word).collect::<Vec<_>>().join(" "));
    }
    Ok(DecodedCorpus {
        lines,
        outcomes,
        report,
    })
}
