//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

mod common;

use std::collections::HashSet;
use std::process::Command;
use std::time::Instant;

use common::{fixture, oracle_nearest, random_matrix, rng, sq, Fixture};
use logoquant::codec::{self, format_symbols, CodecModel, Decoder, EncodedCorpus};
use logoquant::dod::{dod_value, initial_k, vocab_reduction};
use logoquant::pq::lloyd::lloyd;
use logoquant::pq::seeding::{extend_seeds, selection_probabilities};
use logoquant::pq::{self, CodeTuple, SubspacePartition, TrainingConfig};
use logoquant::vocab::{corpus_stats, CorpusStats};
use rand::{Rng as _, SeedableRng};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn reversibility(f: &Fixture, fit_secs: f64) -> Check {
    let t = Instant::now();
    let decoder = Decoder::new(&f.model.table, &f.model.codebook).map_err(|e| e.to_string())?;
    let sum = f.model.checksum();
    let input = f.lines.join("\n") + "\n";
    let lines: Vec<&str> = input.split('\n').collect();
    let mut groups = 0;
    for fct in [0.0, f.vocab.median_frequency(), f64::INFINITY] {
        let enc = codec::encode_with(&f.model, &lines, fct).map_err(|e| e.to_string())?;
        let dec = codec::decode_corpus(&EncodedCorpus::parse(&enc.to_text()), &sum, &decoder, false)
            .map_err(|e| e.to_string())?;
        ensure(dec.to_text() == input, format!("f_ct={fct}: decoded corpus differs"))?;
        ensure(dec.report.all_exact(), format!("f_ct={fct}: {}", dec.report))?;
        groups += dec.report.exact;
    }
    let secs = fit_secs + t.elapsed().as_secs_f64();
    ensure(secs < 120.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "{} sentences, {} words; byte-identical at f_ct in {{0, median, inf}}; {groups} symbol groups all exact; {secs:.1}s",
        f.lines.len(),
        f.vocab.len()
    ))
}

fn reduction(f: &Fixture) -> Check {
    let ks = f.fit.codebook.ks();
    let total: usize = ks.iter().sum();
    let n = f.vocab.len();
    let lower = 3 * initial_k(n, 3);
    let factor = vocab_reduction(n, &ks);
    ensure(f.fit.report.value == 1.0, "distinctness below 1")?;
    ensure(lower <= total && total * 10 <= n, format!("sum k = {total} outside [{lower}, {}]", n / 10))?;
    Ok(format!(
        "ks = {ks:?}, sum = {total} in [{lower}, {}], reduction factor {factor:.1} (ideal {:.1})",
        n / 10,
        n as f64 / lower as f64
    ))
}

fn constants() -> Check {
    let k = initial_k(64000, 3);
    let r = vocab_reduction(64000, &[40, 40, 40]);
    ensure(k == 40, format!("initial k = {k}"))?;
    ensure((r - 533.0).abs() <= 1.0, format!("reduction {r}"))?;
    Ok(format!("initial k = {k}, reduction = {r:.3}"))
}

fn dod_suite() -> Check {
    for (w, b) in [(1, 1.0), (5000, 1.0), (64000, 0.5), (10, 3.0)] {
        ensure(dod_value(w, w, b) == 1.0, format!("D({w},{w},{b}) != 1"))?;
    }
    let v = dod_value(64000, 32000, 0.5);
    ensure((v - (-0.5f64).exp()).abs() < 1e-12, format!("D(64000,32000,0.5) = {v}"))?;
    let mut checked = 0;
    for w in [2usize, 10, 100, 5000, 64000] {
        for b in [0.1, 0.5, 1.0, 2.0] {
            let mut prev = dod_value(w, (w / 100).max(1), b);
            for q in (w / 100).max(1) + 1..=w {
                let cur = dod_value(w, q, b);
                ensure(cur > prev, format!("not increasing at W={w} Q={q} b={b}"))?;
                prev = cur;
                checked += 1;
            }
        }
    }
    Ok(format!("D(W,W,b) = 1; D(64000,32000,0.5) = {v:.15}; {checked} monotone steps"))
}

fn seeding_suite() -> Check {
    let mut r = rng(50);
    let n = 400;
    let pts: Vec<f64> = (0..n * 2).map(|_| r.random_range(-1.0..1.0)).collect();
    let rho: Vec<f64> = (0..n).map(|_| r.random_range(0.05..3.0)).collect();
    let mut chosen = vec![0usize];
    let mut worst: f64 = 0.0;
    for step in 1..30 {
        let d2: Vec<f64> = (0..n)
            .map(|i| {
                chosen
                    .iter()
                    .map(|&c| sq(&pts[2 * i..2 * i + 2], &pts[2 * c..2 * c + 2]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let p = selection_probabilities(Some(&rho), &d2).ok_or("no positive weight")?;
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
        for &c in &chosen {
            ensure(p[c] == 0.0, format!("step {step}: chosen point has probability {}", p[c]))?;
        }
        chosen.push(r.random_range(0..n));
        chosen.dedup();
    }
    ensure(worst < 1e-12, format!("normalization error {worst:e}"))?;

    let trials = 100_000u32;
    let mut mc = logoquant::rng::Rng::seed_from_u64(51);
    let mut dense = 0u32;
    for _ in 0..trials {
        let s = extend_seeds(&[0.0, 1.0, -1.0], 1, 2, Some(&[1.0, 4.0, 1.0]), vec![0], &mut mc)
            .map_err(|e| e.to_string())?;
        dense += (s[1] == 1) as u32;
    }
    let nt = trials as f64;
    let sigma = (nt * 0.8 * 0.2).sqrt();
    let z = (dense as f64 - 0.8 * nt) / sigma;
    ensure(z.abs() <= 3.0, format!("4:1 test z = {z:.2}"))?;
    Ok(format!(
        "max |sum p - 1| = {worst:.1e}; chosen points never redrawn; 4:1 ratio {dense}/{trials} (z = {z:.2})"
    ))
}

fn lloyd_suite() -> Check {
    let mut r = rng(60);
    let mut iterations = 0;
    for inst in 0..100 {
        let n = r.random_range(20..300);
        let dim = r.random_range(1..5);
        let k = r.random_range(1..12).min(n);
        let pts: Vec<f64> = (0..n * dim).map(|_| r.random_range(-5.0..5.0)).collect();
        let res = lloyd(&pts, dim, pts[..k * dim].to_vec(), 100);
        iterations += res.trace.len();
        for w in res.trace.windows(2) {
            ensure(w[1] <= w[0] + 1e-12, format!("instance {inst}: trace rises {} -> {}", w[0], w[1]))?;
        }
    }
    let pts: Vec<f64> = (0..900).map(|_| r.random_range(-2.0..9.0)).collect();
    let res = lloyd(&pts, 3, pts[3..6].to_vec(), 100);
    let mut err: f64 = 0.0;
    for d in 0..3 {
        let mean = pts.iter().skip(d).step_by(3).sum::<f64>() / 300.0;
        err = err.max((res.centroids[d] - mean).abs());
    }
    ensure(err < 1e-9, format!("k=1 centroid off the mean by {err:e}"))?;
    Ok(format!("100 instances ({iterations} trace points) non-increasing; k=1 mean error {err:.1e}"))
}

fn oracle_suite(f: &Fixture) -> Check {
    let x = random_matrix(600, 6, &mut rng(70));
    let p = SubspacePartition::new(6, 3).unwrap();
    let cb = pq::train(&x, p, &[17, 23, 11], &TrainingConfig::default()).map_err(|e| e.to_string())?;
    let queries = random_matrix(200, 6, &mut rng(71));
    let mut agree = 0;
    for q in queries.iter_rows() {
        let t = cb.quantize(q).map_err(|e| e.to_string())?;
        let brute: Vec<u32> = (0..3)
            .map(|i| {
                let sub = &q[2 * i..2 * i + 2];
                let mut best = (f64::INFINITY, 0u32);
                for j in 0..cb.k(i) {
                    let d = sq(sub, cb.centroid(i, j));
                    if d < best.0 {
                        best = (d, j as u32);
                    }
                }
                best.1
            })
            .collect();
        agree += (t.indices() == brute.as_slice()) as usize;
    }
    ensure(agree == 200, format!("quantize agreed on {agree}/200"))?;

    let table = &f.model.table;
    let decoder = Decoder::new(table, &f.model.codebook).map_err(|e| e.to_string())?;
    let mut r = rng(72);
    let mut matched = 0;
    for _ in 0..500 {
        let w = r.random_range(0..table.len());
        let mut idx = table.codes()[w].indices().to_vec();
        let d = r.random_range(0..idx.len());
        let old = idx[d];
        while idx[d] == old {
            idx[d] = r.random_range(0..table.ks()[d] as u32);
        }
        let t = CodeTuple(idx);
        let syms = format_symbols(&t, table.prefixes());
        let toks: Vec<&str> = syms.iter().map(String::as_str).collect();
        let out = decoder.decode_tokens(&toks).map_err(|e| e.to_string())?;
        matched += (out.len() == 1 && out[0].word == oracle_nearest(&f.model, &t)) as usize;
    }
    ensure(matched == 500, format!("decoder agreed on {matched}/500 corruptions"))?;
    Ok("quantize 200/200 vs exhaustive argmin; decoder 500/500 corruptions vs exhaustive scan".into())
}

fn tradeoff(f: &Fixture) -> Check {
    let raw = CorpusStats::from_lines(&f.lines);
    let grid = [0.0, 1e-5, 5e-5, f.vocab.median_frequency(), 1e-4, 1e-3, 1e-2, f64::INFINITY];
    let mut rows = Vec::new();
    let mut prev = 0.0;
    for fct in grid {
        let s = corpus_stats(&f.lines, Some((&f.model.table, fct))).map_err(|e| e.to_string())?;
        ensure(s.avg_sentence_length >= prev, format!("average length drops at f_ct={fct}"))?;
        prev = s.avg_sentence_length;
        rows.push(format!("{fct:e}:{}/{:.2}", s.distinct_token_count, s.avg_sentence_length));
    }
    let all = corpus_stats(&f.lines, Some((&f.model.table, f64::INFINITY))).map_err(|e| e.to_string())?;
    ensure(
        all.avg_sentence_length == 3.0 * raw.avg_sentence_length,
        format!("inf length {} vs 3 x {}", all.avg_sentence_length, raw.avg_sentence_length),
    )?;
    let enc = codec::encode_with(&f.model, &f.lines, f64::INFINITY).map_err(|e| e.to_string())?;
    let escaped: HashSet<&str> = enc
        .lines
        .iter()
        .flat_map(|l| l.split_whitespace())
        .filter(|t| t.starts_with('\\'))
        .collect();
    let ks: usize = f.model.codebook.ks().iter().sum();
    ensure(
        all.distinct_token_count <= ks + escaped.len(),
        format!("{} distinct tokens > {ks} + {}", all.distinct_token_count, escaped.len()),
    )?;
    Ok(format!(
        "avg length non-decreasing over {} cutoffs; inf = 3 x {:.3}; distinct tokens at inf {} <= {ks} + {} (raw vocabulary {}); [{}]",
        grid.len(),
        raw.avg_sentence_length,
        all.distinct_token_count,
        escaped.len(),
        raw.distinct_token_count,
        rows.join(" ")
    ))
}

fn determinism(f: &Fixture) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, f.lines.join("\n")).map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for (name, extra) in [("a", None), ("b", None), ("c", Some("--sequential"))] {
        let out = dir.path().join(format!("{name}.lqc.json"));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_logoquant"));
        cmd.args(["fit", "--corpus"]).arg(&corpus).arg("--out").arg(&out);
        if let Some(flag) = extra {
            cmd.arg(flag);
        }
        let o = cmd.output().map_err(|e| e.to_string())?;
        ensure(o.status.success(), String::from_utf8_lossy(&o.stderr).into_owned())?;
        files.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], "two fits differ")?;
    ensure(files[0] == files[2], "sequential fit differs from parallel")?;

    let p = SubspacePartition::new(6, 3).unwrap();
    let cfg = TrainingConfig::default();
    let ks = f.fit.codebook.ks();
    let par = pq::train_with(&f.x, p, &ks, &cfg, true).map_err(|e| e.to_string())?;
    let seq = pq::train_with(&f.x, p, &ks, &cfg, false).map_err(|e| e.to_string())?;
    ensure(par == seq, "parallel and sequential training differ")?;
    Ok(format!(
        "fit twice and --sequential: identical {}-byte codebooks; parallel == sequential training at ks {ks:?}",
        files[0].len()
    ))
}

fn persistence(f: &Fixture) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.lqc.json");
    f.model.save(&path).map_err(|e| e.to_string())?;
    let back = CodecModel::load(&path).map_err(|e| e.to_string())?;
    ensure(back == f.model, "loaded model differs")?;
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    ensure(back.to_bytes() == bytes, "re-serialization differs")?;
    let bits_equal = (0..f.model.codebook.m()).all(|i| {
        let a = f.model.codebook.sub_codebook(i);
        let b = back.codebook.sub_codebook(i);
        a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
    });
    ensure(bits_equal, "centroid bits differ")?;

    let mut r = rng(80);
    let flips = 400;
    for _ in 0..flips {
        let pos = r.random_range(0..bytes.len());
        let mut bad = bytes.clone();
        bad[pos] ^= 1 << r.random_range(0..8);
        match CodecModel::from_bytes(&bad) {
            Err(e) if e.is_integrity() => {}
            Err(e) => return Err(format!("flip at {pos}: non-integrity error {e}")),
            Ok(_) => return Err(format!("flip at {pos} accepted")),
        }
    }
    let truncated = CodecModel::from_bytes(&bytes[..bytes.len() - 10]);
    ensure(matches!(truncated, Err(ref e) if e.is_integrity()), "truncation accepted")?;
    let future = String::from_utf8(bytes.clone()).unwrap().replacen("\"version\": 1", "\"version\": 9", 1);
    ensure(
        matches!(CodecModel::from_bytes(future.as_bytes()), Err(codec::PersistError::UnsupportedVersion { .. })),
        "future version accepted",
    )?;
    Ok(format!(
        "{}-byte file round-trips bit-exactly; {flips} random bit flips, truncation and a future version all rejected",
        bytes.len()
    ))
}

fn main() {
    let t = Instant::now();
    let f = fixture(5000, 2000, logoquant::DEFAULT_SEED);
    let fit_secs = t.elapsed().as_secs_f64();

    let criteria: Vec<Criterion> = vec![
        ("AC1 full reversibility", Box::new(|| reversibility(&f, fit_secs))),
        ("AC2 dictionary reduction", Box::new(|| reduction(&f))),
        ("AC3 constants", Box::new(constants)),
        ("AC4 distinctness metric", Box::new(dod_suite)),
        ("AC5 seeding distribution", Box::new(seeding_suite)),
        ("AC6 Lloyd monotonicity", Box::new(lloyd_suite)),
        ("AC7 oracle equivalence", Box::new(|| oracle_suite(&f))),
        ("AC8 length/dictionary trade-off", Box::new(|| tradeoff(&f))),
        ("AC9 determinism", Box::new(|| determinism(&f))),
        ("AC10 persistence", Box::new(|| persistence(&f))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
