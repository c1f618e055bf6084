//! Word vectors: GloVe-style text loading/saving and a seeded synthetic generator.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::rng;
use crate::vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: component {value:?} is not a finite decimal number")]
    NonNumeric { line: usize, value: String },
    #[error("line {line}: missing vector components")]
    Empty { line: usize },
    #[error("no embedding for vocabulary word(s): {}", .0.join(", "))]
    MissingWords(Vec<String>),
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
}

/// One row of `dim` reals per word; row `i` belongs to `words[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
    words: Vec<String>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from row-major `data`. Panics if the shape is inconsistent.
    pub fn new(dim: usize, data: Vec<f64>, words: Vec<String>) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        assert_eq!(data.len(), dim * words.len(), "data does not match dim x rows");
        assert!(data.iter().all(|v| v.is_finite()), "embedding values must be finite");
        EmbeddingMatrix { dim, data, words }
    }

    /// Builds an unlabelled matrix; rows are named by their index.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flatten().copied().collect();
        let words = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(dim, data, words)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.words.len()
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    /// Writes the matrix in the text format read by [`load_embeddings`].
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (word, row) in self.words.iter().zip(self.iter_rows()) {
            write!(out, "{word}")?;
            for v in row {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// What to do when a vocabulary word has no line in the embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Error,
    /// Fill the gap with the word's row from [`synthesize_embeddings`] under this seed.
    Synthesize { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct LoadedEmbeddings {
    pub matrix: EmbeddingMatrix,
    /// Words present in the file but absent from the vocabulary.
    pub out_of_vocabulary: Vec<String>,
    /// Vocabulary words that were filled by the missing-word policy.
    pub synthesized: Vec<String>,
}

/// Parses a float, accepting plain decimals and exponent notation only.
fn parse_component(tok: &str) -> Option<f64> {
    let ok = !tok.is_empty()
        && tok
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'));
    if !ok {
        return None;
    }
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads "word c1 c2 ... cn" lines and aligns them to `vocab`'s word indices.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    vocab: &Vocabulary,
    policy: MissingPolicy,
) -> Result<LoadedEmbeddings, EmbeddingError> {
    let mut dim: Option<usize> = None;
    let mut found: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut oov = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let mut toks = line.split_whitespace();
        let Some(word) = toks.next() else { continue };
        let mut values = Vec::new();
        for tok in toks {
            match parse_component(tok) {
                Some(v) => values.push(v),
                None => {
                    return Err(EmbeddingError::NonNumeric {
                        line: lineno,
                        value: tok.to_owned(),
                    })
                }
            }
        }
        if values.is_empty() {
            return Err(EmbeddingError::Empty { line: lineno });
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(EmbeddingError::Dimension {
                    line: lineno,
                    expected: d,
                    found: values.len(),
                })
            }
            _ => {}
        }
        match vocab.index_of(word) {
            // first occurrence wins
            Some(idx) => {
                found.entry(idx).or_insert(values);
            }
            None => oov.push(word.to_owned()),
        }
    }

    let missing: Vec<usize> = (0..vocab.len()).filter(|i| !found.contains_key(i)).collect();
    let mut synthesized = Vec::new();
    let fallback = match (policy, missing.is_empty()) {
        (_, true) => None,
        (MissingPolicy::Error, false) => {
            return Err(EmbeddingError::MissingWords(
                missing.iter().map(|&i| vocab.word(i).to_owned()).collect(),
            ))
        }
        (MissingPolicy::Synthesize { seed }, false) => {
            let d = dim.unwrap_or(crate::DEFAULT_DIM);
            Some(synthesize_embeddings(vocab, d, seed)?)
        }
    };
    let dim = dim.unwrap_or_else(|| fallback.as_ref().map_or(crate::DEFAULT_DIM, |f| f.dim));

    let mut data = Vec::with_capacity(vocab.len() * dim);
    for idx in 0..vocab.len() {
        match found.get(&idx) {
            Some(v) => data.extend_from_slice(v),
            None => {
                let f = fallback.as_ref().expect("fallback present when words are missing");
                data.extend_from_slice(f.row(idx));
                synthesized.push(vocab.word(idx).to_owned());
            }
        }
    }
    Ok(LoadedEmbeddings {
        matrix: EmbeddingMatrix::new(dim, data, vocab.words().to_vec()),
        out_of_vocabulary: oov,
        synthesized,
    })
}

/// Loads an embedding file; a `.gz` extension is decompressed on the fly.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    policy: MissingPolicy,
) -> Result<LoadedEmbeddings, EmbeddingError> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        read_embeddings(BufReader::new(GzDecoder::new(file)), vocab, policy)
    } else {
        read_embeddings(BufReader::new(file), vocab, policy)
    }
}

/// Deterministic stand-in for trained word vectors.
///
/// Vectors come from a mixture of isotropic Gaussians whose means lie on a
/// lattice with `g` levels per coordinate. Each word owns one component. The
/// lattice cell is drawn coordinate by coordinate from a discretized normal
/// around the lattice centre whose width grows with the word's frequency rank,
/// so frequent words crowd the central cells (denser regions) and rare words
/// spread over the whole lattice. The component spread also grows with rank
/// but stays well below the lattice spacing, which keeps every subspace of
/// the vectors clusterable.
pub fn synthesize_embeddings(
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    if dim == 0 {
        return Err(EmbeddingError::ZeroDimension);
    }
    let n = vocab.len();
    let mut rng = rng::substream(seed, rng::stream::SYNTH_EMBEDDING);

    // smallest g with g^dim >= 4n, so cells stay plentiful
    let target = 4.0 * n.max(1) as f64;
    let mut levels = 2usize;
    while (levels as f64).powi(dim.min(64) as i32) < target {
        levels += 1;
    }
    let spacing = 2.0 / (levels - 1) as f64;
    let centre = (levels - 1) as f64 / 2.0;

    const WIDTH_MIN: f64 = 0.35;
    const SPREAD_MIN: f64 = 0.025;
    const SPREAD_MAX: f64 = 0.1;

    let mut taken = HashSet::with_capacity(n);
    let mut cell = vec![0usize; dim];
    let mut data = vec![0.0; n * dim];
    for (rank, &word) in vocab.rank_order().iter().enumerate() {
        let t = if n > 1 { rank as f64 / (n - 1) as f64 } else { 0.0 };
        let mut width = (WIDTH_MIN + t * levels as f64 / 2.0).max(WIDTH_MIN);
        loop {
            for c in cell.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c = (centre + width * z).round().clamp(0.0, (levels - 1) as f64) as usize;
            }
            if taken.insert(cell.clone()) {
                break;
            }
            width *= 1.02;
        }
        let spread = (SPREAD_MIN + (SPREAD_MAX - SPREAD_MIN) * t) * spacing;
        let row = &mut data[word * dim..(word + 1) * dim];
        for (v, &c) in row.iter_mut().zip(&cell) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = -1.0 + c as f64 * spacing + spread * z;
        }
    }
    Ok(EmbeddingMatrix::new(dim, data, vocab.words().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::ingest_corpus;

    fn load_str(text: &str, vocab: &Vocabulary) -> Result<LoadedEmbeddings, EmbeddingError> {
        read_embeddings(text.as_bytes(), vocab, MissingPolicy::Error)
    }

    #[test]
    fn loads_aligned_matrix() {
        let vocab = ingest_corpus(["b a"]).unwrap();
        let e = load_str("a 1.0 2.0\nb 3.0 4.0\nzz 0 0\n", &vocab).unwrap();
        assert_eq!(e.matrix.dim(), 2);
        assert_eq!(e.matrix.row(0), &[3.0, 4.0]);
        assert_eq!(e.matrix.row(1), &[1.0, 2.0]);
        assert_eq!(e.out_of_vocabulary, vec!["zz".to_string()]);
    }

    #[test]
    fn accepts_exponent_notation() {
        let vocab = ingest_corpus(["a"]).unwrap();
        let e = load_str("a 1e-3 -2.5E+2\n", &vocab).unwrap();
        assert_eq!(e.matrix.row(0), &[1e-3, -250.0]);
    }

    #[test]
    fn inconsistent_dimension() {
        let vocab = ingest_corpus(["a b"]).unwrap();
        let err = load_str("a 1 2 3 4 5\nb 1 2 3 4 5 6\n", &vocab).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::Dimension { line: 2, expected: 5, found: 6 }
        ));
    }

    #[test]
    fn rejects_locale_and_non_finite_components() {
        let vocab = ingest_corpus(["a"]).unwrap();
        for bad in ["a 1,5", "a nan", "a inf", "a x1"] {
            assert!(matches!(load_str(bad, &vocab), Err(EmbeddingError::NonNumeric { .. })), "{bad}");
        }
    }

    #[test]
    fn missing_word_is_named() {
        let vocab = ingest_corpus(["a b c"]).unwrap();
        let err = load_str("a 1 2\nb 3 4\n", &vocab).unwrap_err();
        assert!(err.to_string().ends_with(": c"));
        match err {
            EmbeddingError::MissingWords(w) => assert_eq!(w, vec!["c".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_word_fallback() {
        let vocab = ingest_corpus(["a b c"]).unwrap();
        let e = read_embeddings(
            "a 1 2\nb 3 4\n".as_bytes(),
            &vocab,
            MissingPolicy::Synthesize { seed: 3 },
        )
        .unwrap();
        assert_eq!(e.synthesized, vec!["c".to_string()]);
        let synth = synthesize_embeddings(&vocab, 2, 3).unwrap();
        assert_eq!(e.matrix.row(2), synth.row(2));
    }

    #[test]
    fn text_round_trip() {
        let vocab = ingest_corpus(["x y z"]).unwrap();
        let m = synthesize_embeddings(&vocab, 6, 11).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = read_embeddings(buf.as_slice(), &vocab, MissingPolicy::Error).unwrap();
        assert_eq!(back.matrix, m);
    }

    #[test]
    fn gz_files_are_decompressed() {
        use flate2::{write::GzEncoder, Compression};
        let vocab = ingest_corpus(["a"]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        enc.write_all(b"a 0.5 1.5\n").unwrap();
        enc.finish().unwrap();
        let e = load_embeddings(&path, &vocab, MissingPolicy::Error).unwrap();
        assert_eq!(e.matrix.row(0), &[0.5, 1.5]);
    }

    #[test]
    fn synthetic_is_deterministic_and_finite() {
        let lines: Vec<String> = (0..1000).map(|i| format!("w{i}")).collect();
        let vocab = ingest_corpus(&lines).unwrap();
        let a = synthesize_embeddings(&vocab, 6, 5).unwrap();
        let b = synthesize_embeddings(&vocab, 6, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.rows(), a.dim()), (1000, 6));
        assert!(a.data().iter().all(|v| v.is_finite()));
        assert_ne!(a, synthesize_embeddings(&vocab, 6, 6).unwrap());
    }
}
