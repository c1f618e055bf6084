//! Seeded synthetic corpora for demos and tests.

use rand::Rng as _;

use crate::rng;

/// The `i`-th synthetic logogram: consecutive CJK unified ideographs.
pub fn logogram(i: usize) -> String {
    let base = 0x4E00u32;
    let span = 0x9FFF - base + 1;
    let i = i as u32;
    let first = char::from_u32(base + i % span).expect("CJK range");
    if i < span {
        first.to_string()
    } else {
        let second = char::from_u32(base + (i / span - 1) % span).expect("CJK range");
        format!("{second}{first}")
    }
}

/// `sentences` lines over a `vocab_size`-word vocabulary with Zipf-like word
/// frequencies. Every word occurs at least once.
pub fn zipf_corpus(vocab_size: usize, sentences: usize, seed: u64) -> Vec<String> {
    assert!(vocab_size > 0 && sentences > 0);
    let mut rng = rng::substream(seed, rng::stream::SYNTH_CORPUS);
    let cumulative: Vec<f64> = (1..=vocab_size)
        .scan(0.0, |acc, r| {
            *acc += 1.0 / r as f64;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap();
    let mut lines: Vec<Vec<usize>> = vec![Vec::new(); sentences];
    // seed each sentence round-robin so every word appears
    for w in 0..vocab_size {
        lines[w % sentences].push(w);
    }
    for line in lines.iter_mut() {
        let len = rng.random_range(8..=30usize);
        while line.len() < len {
            let u = rng.random::<f64>() * total;
            let w = cumulative.partition_point(|&c| c <= u).min(vocab_size - 1);
            line.push(w);
        }
        // interleave the guaranteed words with the sampled ones
        for i in (1..line.len()).rev() {
            let j = rng.random_range(0..=i);
            line.swap(i, j);
        }
    }
    lines
        .into_iter()
        .map(|l| l.into_iter().map(logogram).collect::<Vec<_>>().join(" "))
        .collect()
}
