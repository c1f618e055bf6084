//! Seed derivation. Every random draw in the crate comes from a ChaCha8
//! stream keyed by the master seed plus a purpose-specific stream id.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids are partitioned by purpose in the high byte.
pub mod stream {
    pub const SUBSPACE_TRAIN: u64 = 1 << 56;
    pub const KDE_SUBSAMPLE: u64 = 2 << 56;
    pub const SYNTH_EMBEDDING: u64 = 3 << 56;
    pub const SYNTH_CORPUS: u64 = 4 << 56;
}

pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream used to train subspace `subspace` with `k` clusters. Depends only on
/// (seed, subspace, k), so any trained sub-codebook can be recomputed from
/// those three values.
pub fn subspace_stream(seed: u64, subspace: usize, k: usize) -> Rng {
    substream(
        seed,
        stream::SUBSPACE_TRAIN | ((subspace as u64 & 0xff) << 48) | (k as u64 & 0xffff_ffff_ffff),
    )
}
