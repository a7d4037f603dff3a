//! Deterministic seed derivation for trajectories and lattice sites.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep site draws and sample streams from sharing hash inputs.
pub const SITE_DOMAIN: u64 = 0x5349_5445;
pub const STREAM_DOMAIN: u64 = 0x5354_524d;

/// The random generator used for every trajectory and sample stream.
pub type StreamRng = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of an ordered list of words.
#[inline]
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908_u64, |h, &w| splitmix64(h ^ splitmix64(w)))
}

/// Maps a 64-bit word to a uniform double in `[0, 1)`.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Independent stream for item `index` of a run seeded by `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> StreamRng {
    let mut seed = [0u8; 32];
    for (k, chunk) in seed.chunks_mut(8).enumerate() {
        let w = hash_words(&[master_seed, STREAM_DOMAIN, index, k as u64]);
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
