//! Vocabulary compression for logographic languages.
//!
//! Word embeddings are product-quantized into `m` subspaces; each word becomes
//! a tuple of sub-codebook indices written as prefixed symbols (`@25 $814
//! &778`). Symbols are shared across words, so a small symbol dictionary
//! stands in for a large word dictionary. Only infrequent words are
//! decomposed, and a nearest-codeword search maps corrupted symbol groups
//! back to the closest word.
//!
//! The pipeline is: [`vocab::ingest_corpus`] → [`embedding`] →
//! [`dod::fit`] (grows cluster counts until the code is distinct enough) →
//! [`codec::encode_corpus`] / [`codec::Decoder`].

pub mod cli;
pub mod codec;
pub mod config;
pub mod dod;
pub mod embedding;
pub mod io;
pub mod pq;
pub mod rng;
pub mod synth;
pub mod vocab;

pub use config::EncoderConfig;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DIM: usize = 6;
pub const DEFAULT_M: usize = 3;
