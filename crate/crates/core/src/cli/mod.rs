//! `logoquant` command line: fit, encode, decode, stats.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 distinctness target
//! unreachable, 3 integrity failure (checksum, truncated or tampered file).

pub mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::codec::{self, CodecError, CodecModel, Decoder, EncodedCorpus, PersistError, SymbolTable};
use crate::config::EncoderConfig;
use crate::dod::{self, DodError, SearchStrategy, TRACE_HEADER};
use crate::embedding::{self, EmbeddingError, MissingPolicy};
use crate::io::write_atomic;
use crate::pq::{Bandwidth, DensityWeighting, PqError, SeedingMode};
use crate::vocab::{self, tokenize, CorpusStats, VocabError};
use manifest::RunManifest;

pub const THREADS_ENV: &str = "LOGOQUANT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "logoquant", version, about = "Abstract-subword vocabulary codec")]
pub struct Cli {
    /// Append the run manifest here (default: next to the output file).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a codebook whose code tuples reach the distinctness target.
    Fit(FitArgs),
    /// Replace infrequent words of a corpus by their symbols.
    Encode(EncodeArgs),
    /// Turn an encoded corpus back into words.
    Decode(DecodeArgs),
    /// Dictionary size and sentence length over a grid of cutoff frequencies.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Pq,
    Dapq,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StrategyArg {
    Uniform,
    PerSubspace,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum WeightingArg {
    Raw,
    Log,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MissingArg {
    Error,
    Synthesize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SpaceArg {
    Codeword,
    Embedding,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    /// GloVe-style text vectors ("word c1 ... cn", optionally .gz). Synthetic
    /// vectors are generated when omitted.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Tokenized corpus, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = crate::DEFAULT_M)]
    m: usize,
    #[arg(long = "dod-target", default_value_t = 1.0)]
    dod_target: f64,
    #[arg(long, default_value_t = dod::DEFAULT_ETA)]
    eta: usize,
    #[arg(long, default_value_t = dod::DEFAULT_B)]
    b: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Dapq)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = WeightingArg::Raw)]
    weighting: WeightingArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    strategy: StrategyArg,
    /// "auto" (Scott's rule) or a positive number.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    #[arg(long, default_value_t = crate::DEFAULT_SEED)]
    seed: u64,
    #[arg(long = "max-rounds", default_value_t = dod::DEFAULT_MAX_ROUNDS)]
    max_rounds: usize,
    /// Dimension of synthetic vectors when --embeddings is omitted.
    #[arg(long, default_value_t = crate::DEFAULT_DIM)]
    dim: usize,
    /// What to do with corpus words missing from the embedding file.
    #[arg(long, value_enum, default_value_t = MissingArg::Error)]
    missing: MissingArg,
    /// Drop corpus sentences with more than this many words before fitting.
    #[arg(long = "max-sentence-words")]
    max_sentence_words: Option<usize>,
    /// Train subspaces one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
    /// Output codebook (.lqc.json).
    #[arg(long)]
    out: PathBuf,
    /// Fit trace (default: <out>.trace.tsv).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EncodeArgs {
    #[arg(long)]
    codebook: PathBuf,
    /// Cutoff frequency; words with frequency <= fct are decomposed ("inf" decomposes all).
    #[arg(long, default_value_t = 0.0)]
    fct: f64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Drop sentences whose encoded length exceeds this many tokens.
    #[arg(long = "max-len")]
    max_len: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct DecodeArgs {
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Replace malformed symbol groups by ⟨UNK⟩ instead of failing.
    #[arg(long)]
    lenient: bool,
    #[arg(long = "recovery-space", value_enum, default_value_t = SpaceArg::Codeword)]
    recovery_space: SpaceArg,
    /// Original embeddings, required with --recovery-space embedding.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Write the recovery report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated cutoff frequencies; "inf" is allowed.
    #[arg(long = "fct-grid", default_value = "0,1e-5,1e-4,1e-3,1e-2,inf")]
    fct_grid: String,
    /// CSV output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Pq(#[from] PqError),
    #[error(transparent)]
    Dod(#[from] DodError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("{path}: {source}")]
    Persist { path: PathBuf, source: PersistError },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Dod(DodError::Unreachable { .. } | DodError::RoundLimit { .. }) => 2,
            CliError::Dod(DodError::Pq(_)) => 1,
            CliError::Persist { source, .. } if source.is_integrity() => 3,
            CliError::Codec(CodecError::HeaderMismatch { .. }) => 3,
            CliError::Codec(CodecError::Persist(p)) if p.is_integrity() => 3,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_text(path: &Path) -> Result<(String, Vec<u8>), CliError> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Usage(format!("{}: not valid UTF-8", path.display())))?;
    Ok((text, bytes))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load_model(path: &Path, manifest: &mut RunManifest) -> Result<CodecModel, CliError> {
    let bytes = read(path)?;
    manifest.input(path, &bytes);
    let model = CodecModel::from_bytes(&bytes).map_err(|source| CliError::Persist {
        path: path.to_owned(),
        source,
    })?;
    manifest.codebook_checksum = Some(model.checksum());
    Ok(model)
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, CliError> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Bandwidth::Auto);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
        _ => Err(CliError::Usage(format!(
            "--bandwidth must be \"auto\" or a positive number, got {s:?}"
        ))),
    }
}

/// Parses "0,1e-5,inf" style lists; "∞" is accepted for infinity.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v = if t == "∞" { Ok(f64::INFINITY) } else { t.parse::<f64>() };
            match v {
                Ok(v) if v >= 0.0 => Ok(v),
                _ => Err(CliError::Usage(format!("invalid cutoff frequency {t:?}"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|g| {
            if g.is_empty() {
                Err(CliError::Usage("empty --fct-grid".into()))
            } else {
                Ok(g)
            }
        })
}

fn fmt_fct(f: f64) -> String {
    if f.is_infinite() {
        "inf".into()
    } else {
        f.to_string()
    }
}

fn cmd_fit(args: &FitArgs, manifest: &mut RunManifest) -> Result<String, CliError> {
    if !(args.dod_target > 0.0 && args.dod_target <= 1.0) {
        return Err(CliError::Usage(format!(
            "--dod-target must lie in (0, 1], got {}",
            args.dod_target
        )));
    }
    let config = EncoderConfig {
        m: args.m,
        dod_target: args.dod_target,
        eta: args.eta,
        b: args.b,
        f_ct: 0.0,
        bandwidth: parse_bandwidth(&args.bandwidth)?,
        seed: args.seed,
        mode: match args.mode {
            ModeArg::Pq => SeedingMode::KMeansPlusPlus,
            ModeArg::Dapq => SeedingMode::Dapq,
        },
        weighting: match args.weighting {
            WeightingArg::Raw => DensityWeighting::Raw,
            WeightingArg::Log => DensityWeighting::Log,
        },
        strategy: match args.strategy {
            StrategyArg::Uniform => SearchStrategy::Uniform,
            StrategyArg::PerSubspace => SearchStrategy::PerSubspace,
        },
        max_rounds: args.max_rounds,
        ..EncoderConfig::default()
    };

    manifest.stage("ingest");
    let (text, bytes) = read_text(&args.corpus)?;
    manifest.input(&args.corpus, &bytes);
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| args.max_sentence_words.is_none_or(|n| tokenize(l).count() <= n))
        .collect();
    let vocab = vocab::ingest_corpus(&lines)?;

    manifest.stage("embeddings");
    let x = match &args.embeddings {
        Some(path) => {
            let policy = match args.missing {
                MissingArg::Error => MissingPolicy::Error,
                MissingArg::Synthesize => MissingPolicy::Synthesize { seed: args.seed },
            };
            let bytes = read(path)?;
            manifest.input(path, &bytes);
            embedding::load_embeddings(path, &vocab, policy)?.matrix
        }
        None => embedding::synthesize_embeddings(&vocab, args.dim, args.seed)?,
    };
    if config.m == 0 || x.dim() % config.m != 0 {
        return Err(PqError::Indivisible {
            dim: x.dim(),
            m: config.m,
        }
        .into());
    }
    if config.m > codec::symbols::MAX_SUBSPACES {
        return Err(CodecError::TooManySubspaces(config.m).into());
    }

    manifest.stage("fit");
    let mut search = config.search();
    search.parallel = !args.sequential;
    let fitted = dod::fit(&x, config.m, &search, &config.training())?;

    manifest.stage("write");
    let table = SymbolTable::build(&vocab, &fitted.codebook, &x)?;
    let model = CodecModel::new(fitted.codebook, table)?;
    write(&args.out, &model.to_bytes())?;
    manifest.output(&args.out);
    let trace_path = args.trace.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".trace.tsv");
        PathBuf::from(p)
    });
    let mut trace = String::from(TRACE_HEADER);
    trace.push('\n');
    for e in &fitted.trace {
        writeln!(trace, "{e}").unwrap();
    }
    write(&trace_path, trace.as_bytes())?;
    manifest.output(&trace_path);
    manifest.codebook_checksum = Some(model.checksum());

    let ks = model.codebook.ks();
    Ok(format!(
        "fitted {} words: ks={:?} sum={} reduction={:.1} {} rounds={} checksum={}",
        vocab.len(),
        ks,
        ks.iter().sum::<usize>(),
        dod::vocab_reduction(vocab.len(), &ks),
        fitted.report,
        fitted.trace.len(),
        model.checksum()
    ))
}

fn cmd_encode(args: &EncodeArgs, manifest: &mut RunManifest) -> Result<String, CliError> {
    if args.fct.is_nan() || args.fct < 0.0 {
        return Err(CliError::Usage(format!("--fct must be >= 0, got {}", args.fct)));
    }
    manifest.stage("load");
    let model = load_model(&args.codebook, manifest)?;
    let (text, bytes) = read_text(&args.input)?;
    manifest.input(&args.input, &bytes);

    manifest.stage("encode");
    let lines: Vec<&str> = text.split('\n').collect();
    let mut encoded = codec::encode_with(&model, &lines, args.fct)?;
    let mut dropped = 0;
    if let Some(max) = args.max_len {
        let before = encoded.lines.len();
        encoded.lines.retain(|l| tokenize(l).count() <= max);
        dropped = before - encoded.lines.len();
    }

    manifest.stage("write");
    write(&args.out, encoded.to_text().as_bytes())?;
    manifest.output(&args.out);
    let stats = CorpusStats::from_lines(text.lines());
    let enc_stats = CorpusStats::from_lines(encoded.lines.iter().filter(|l| !l.is_empty()));
    Ok(format!(
        "encoded {} sentences (dropped {dropped}): distinct tokens {} -> {}, avg length {:.3} -> {:.3}",
        stats.sentence_count,
        stats.distinct_token_count,
        enc_stats.distinct_token_count,
        stats.avg_sentence_length,
        enc_stats.avg_sentence_length
    ))
}

fn cmd_decode(args: &DecodeArgs, manifest: &mut RunManifest) -> Result<String, CliError> {
    manifest.stage("load");
    let model = load_model(&args.codebook, manifest)?;
    let (text, bytes) = read_text(&args.input)?;
    manifest.input(&args.input, &bytes);

    let decoder = match args.recovery_space {
        SpaceArg::Codeword => Decoder::new(&model.table, &model.codebook)?,
        SpaceArg::Embedding => {
            let path = args.embeddings.as_ref().ok_or_else(|| {
                CliError::Usage("--recovery-space embedding requires --embeddings".into())
            })?;
            let vocab = vocab::Vocabulary::from_counts(model.table.words().iter().map(|w| (w.clone(), 1)))?;
            let bytes = read(path)?;
            manifest.input(path, &bytes);
            let x = embedding::load_embeddings(path, &vocab, MissingPolicy::Error)?.matrix;
            Decoder::with_embeddings(&model.table, &model.codebook, &x)?
        }
    };

    manifest.stage("decode");
    let corpus = EncodedCorpus::parse(&text);
    let decoded = codec::decode_corpus(&corpus, &model.checksum(), &decoder, args.lenient)?;

    manifest.stage("write");
    write(&args.out, decoded.to_text().as_bytes())?;
    manifest.output(&args.out);
    if let Some(path) = &args.report {
        let json = serde_json::to_vec_pretty(&decoded.report).expect("report serializes");
        write(path, &json)?;
        manifest.output(path);
    }
    Ok(decoded.report.to_string())
}

fn cmd_stats(args: &StatsArgs, manifest: &mut RunManifest) -> Result<String, CliError> {
    let grid = parse_grid(&args.fct_grid)?;
    manifest.stage("load");
    let model = load_model(&args.codebook, manifest)?;
    let (text, bytes) = read_text(&args.corpus)?;
    manifest.input(&args.corpus, &bytes);
    let lines: Vec<&str> = text.lines().collect();

    manifest.stage("stats");
    let raw = CorpusStats::from_lines(&lines);
    let mut csv = String::from("f_ct,distinct_tokens,avg_sentence_length\n");
    for f in grid {
        let s = vocab::corpus_stats(&lines, Some((&model.table, f)))?;
        writeln!(csv, "{},{},{}", fmt_fct(f), s.distinct_token_count, s.avg_sentence_length).unwrap();
    }
    let summary = format!(
        "raw corpus: {} distinct tokens, avg length {}; codebook entries {}",
        raw.distinct_token_count,
        raw.avg_sentence_length,
        model.codebook.ks().iter().sum::<usize>()
    );
    match &args.out {
        Some(path) => {
            write(path, csv.as_bytes())?;
            manifest.output(path);
            Ok(summary)
        }
        None => {
            print!("{csv}");
            Ok(summary)
        }
    }
}

fn configure_threads() {
    let n = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();

    let (name, config, out): (&str, serde_json::Value, Option<&Path>) = match &cli.command {
        Command::Fit(a) => ("fit", serde_json::to_value(a).unwrap(), Some(&a.out)),
        Command::Encode(a) => ("encode", serde_json::to_value(a).unwrap(), Some(&a.out)),
        Command::Decode(a) => ("decode", serde_json::to_value(a).unwrap(), Some(&a.out)),
        Command::Stats(a) => ("stats", serde_json::to_value(a).unwrap(), a.out.as_deref()),
    };
    let mut manifest = RunManifest::new(name, config);
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, &mut manifest),
        Command::Encode(a) => cmd_encode(a, &mut manifest),
        Command::Decode(a) => cmd_decode(a, &mut manifest),
        Command::Stats(a) => cmd_stats(a, &mut manifest),
    };
    let code = match &result {
        Ok(summary) => {
            eprintln!("{summary}");
            manifest.finish(0, None);
            0
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            let code = e.exit_code();
            manifest.finish(code, Some(msg));
            code
        }
    };
    let manifest_path = manifest::default_path(cli.manifest.as_deref(), out);
    if let Err(e) = manifest.append_to(&manifest_path) {
        eprintln!("warning: could not write manifest {}: {e}", manifest_path.display());
    }
    code
}
