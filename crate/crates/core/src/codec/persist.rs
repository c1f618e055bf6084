//! Versioned JSON persistence of a codebook together with its symbol table.
//!
//! Reals are stored as shortest round-trip decimal strings so that a load
//! reproduces every bit. The checksum is the SHA-256 of the compact JSON of
//! the document without its `checksum` field (keys sorted). The file itself
//! must be the canonical pretty rendering of the document, so any edit that
//! survives JSON parsing is still caught.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::table::SymbolTable;
use super::CodecError;
use crate::pq::{Bandwidth, CodeTuple, Codebook, DensityWeighting, SeedingMode, SubspacePartition, TrainingConfig};

pub const FORMAT_VERSION: u64 = 1;
pub const FILE_EXTENSION: &str = ".lqc.json";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("codebook file is truncated")]
    Truncated,
    #[error("codebook file is not valid JSON: {0}")]
    Malformed(String),
    #[error("unsupported codebook format version {found} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion { found: String },
    #[error("codebook file is not in canonical form (modified after writing?)")]
    NonCanonical,
    #[error("codebook checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: String, computed: String },
    #[error("invalid codebook contents: {0}")]
    Invalid(String),
}

impl PersistError {
    /// True for failures that indicate a damaged or tampered file.
    pub fn is_integrity(&self) -> bool {
        !matches!(self, PersistError::Io(_))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfigDoc {
    mode: SeedingMode,
    weighting: DensityWeighting,
    /// "auto" or a decimal bandwidth.
    bandwidth: String,
    seed: u64,
    max_iterations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct WordCode {
    word: String,
    code: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: u64,
    m: usize,
    sub_dim: usize,
    prefixes: Vec<String>,
    ks: Vec<usize>,
    /// Per subspace, row-major `k_i × sub_dim` decimal strings.
    centroids: Vec<Vec<String>>,
    config: ConfigDoc,
    word_to_tuple: Vec<WordCode>,
    frequencies: Vec<String>,
}

fn dec(v: f64) -> String {
    format!("{v:?}")
}

fn parse_dec(s: &str) -> Result<f64, PersistError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| PersistError::Invalid(format!("{s:?} is not a finite decimal")))
}

/// A codebook and the symbol table built from it, persisted as one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecModel {
    pub codebook: Codebook,
    pub table: SymbolTable,
}

impl CodecModel {
    pub fn new(codebook: Codebook, table: SymbolTable) -> Result<Self, CodecError> {
        if table.ks() != codebook.ks().as_slice() {
            return Err(CodecError::Inconsistent(
                "symbol table does not belong to this codebook".into(),
            ));
        }
        Ok(CodecModel { codebook, table })
    }

    fn document(&self) -> Document {
        let cb = &self.codebook;
        let cfg = cb.config();
        Document {
            version: FORMAT_VERSION,
            m: cb.m(),
            sub_dim: cb.partition().sub_dim(),
            prefixes: self.table.prefixes().iter().map(|c| c.to_string()).collect(),
            ks: cb.ks(),
            centroids: (0..cb.m())
                .map(|i| cb.sub_codebook(i).iter().map(|&v| dec(v)).collect())
                .collect(),
            config: ConfigDoc {
                mode: cfg.mode,
                weighting: cfg.weighting,
                bandwidth: match cfg.bandwidth {
                    Bandwidth::Auto => "auto".into(),
                    Bandwidth::Fixed(h) => dec(h),
                },
                seed: cfg.seed,
                max_iterations: cfg.max_iterations,
            },
            word_to_tuple: self
                .table
                .words()
                .iter()
                .zip(self.table.codes())
                .map(|(w, t)| WordCode {
                    word: w.clone(),
                    code: t.indices().to_vec(),
                })
                .collect(),
            frequencies: self.table.frequencies().iter().map(|&f| dec(f)).collect(),
        }
    }

    fn body(&self) -> Value {
        serde_json::to_value(self.document()).expect("document serializes")
    }

    /// Hex SHA-256 over the canonical compact body.
    pub fn checksum(&self) -> String {
        checksum_of(&self.body())
    }

    /// Canonical file bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = self.body();
        let sum = checksum_of(&body);
        body.as_object_mut()
            .expect("document is an object")
            .insert("checksum".into(), Value::String(sum));
        let mut out = serde_json::to_vec_pretty(&body).expect("value serializes");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PersistError> {
        let mut value: Value = serde_json::from_slice(bytes).map_err(|e| {
            if e.is_eof() {
                PersistError::Truncated
            } else {
                PersistError::Malformed(e.to_string())
            }
        })?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| PersistError::Malformed("top level is not an object".into()))?;
        match obj.get("version") {
            Some(Value::Number(n)) if n.as_u64() == Some(FORMAT_VERSION) => {}
            Some(v) => return Err(PersistError::UnsupportedVersion { found: v.to_string() }),
            None => return Err(PersistError::Invalid("missing version".into())),
        }
        let mut canonical = serde_json::to_vec_pretty(&*obj).expect("value serializes");
        canonical.push(b'\n');
        if canonical != bytes {
            return Err(PersistError::NonCanonical);
        }
        let stored = match obj.remove("checksum") {
            Some(Value::String(s)) => s,
            _ => return Err(PersistError::Invalid("missing checksum".into())),
        };
        let computed = checksum_of(&value);
        if stored != computed {
            return Err(PersistError::ChecksumMismatch { stored, computed });
        }
        let doc: Document =
            serde_json::from_value(value).map_err(|e| PersistError::Invalid(e.to_string()))?;
        Self::from_document(doc)
    }

    fn from_document(doc: Document) -> Result<Self, PersistError> {
        let invalid = |msg: String| PersistError::Invalid(msg);
        let partition = SubspacePartition::new(doc.m * doc.sub_dim, doc.m)
            .map_err(|e| invalid(e.to_string()))?;
        if doc.ks.len() != doc.m || doc.centroids.len() != doc.m {
            return Err(invalid("subspace count does not match ks/centroids".into()));
        }
        let expected: Vec<String> = super::symbols::PREFIXES
            .iter()
            .take(doc.m)
            .map(|c| c.to_string())
            .collect();
        if doc.prefixes != expected {
            return Err(invalid(format!("unexpected prefixes {:?}", doc.prefixes)));
        }
        let mut subs = Vec::with_capacity(doc.m);
        for (i, c) in doc.centroids.iter().enumerate() {
            if c.len() != doc.ks[i] * doc.sub_dim {
                return Err(invalid(format!("subspace {i} has {} values", c.len())));
            }
            subs.push(c.iter().map(|s| parse_dec(s)).collect::<Result<Vec<_>, _>>()?);
        }
        let bandwidth = match doc.config.bandwidth.as_str() {
            "auto" => Bandwidth::Auto,
            s => Bandwidth::Fixed(parse_dec(s)?),
        };
        let config = TrainingConfig {
            mode: doc.config.mode,
            weighting: doc.config.weighting,
            bandwidth,
            seed: doc.config.seed,
            max_iterations: doc.config.max_iterations,
        };
        let codebook = Codebook::from_parts(partition, subs, config).map_err(|e| invalid(e.to_string()))?;
        let frequencies = doc
            .frequencies
            .iter()
            .map(|s| parse_dec(s))
            .collect::<Result<Vec<_>, _>>()?;
        let (words, codes) = doc
            .word_to_tuple
            .into_iter()
            .map(|wc| (wc.word, CodeTuple(wc.code)))
            .unzip();
        let table = SymbolTable::from_parts(doc.ks, words, codes, frequencies)
            .map_err(|e| invalid(e.to_string()))?;
        Ok(CodecModel { codebook, table })
    }

    /// Writes atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        crate::io::write_atomic(path, &self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn checksum_of(body: &Value) -> String {
    let compact = serde_json::to_vec(body).expect("value serializes");
    hex::encode(Sha256::digest(&compact))
}

pub fn save_codebook(cb: &Codebook, table: &SymbolTable, path: &Path) -> Result<(), CodecError> {
    CodecModel::new(cb.clone(), table.clone())?.save(path)?;
    Ok(())
}

pub fn load_codebook(path: &Path) -> Result<(Codebook, SymbolTable), PersistError> {
    let m = CodecModel::load(path)?;
    Ok((m.codebook, m.table))
}
