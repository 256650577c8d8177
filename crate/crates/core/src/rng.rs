//! Seed derivation and counter-keyed randomness.
//!
//! All randomness in the crate flows from a single top-level seed.
//! Stages derive their own seed by hashing the stage name into the root
//! seed; inner draws (per sample, per integration step) derive a fresh
//! ChaCha stream from `(seed, key words...)`. Parallel and serial
//! execution therefore see identical streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds key words into a seed, one splitmix round per word.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    let mut state = splitmix64(seed);
    for &w in words {
        state = splitmix64(state ^ w);
    }
    state
}

/// Derives a stage seed from the top-level seed and a stage name
/// (FNV-1a over the name, folded into the seed).
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    mix(seed, &[h])
}

/// A ChaCha stream keyed by `(seed, words...)`.
pub fn keyed_rng(seed: u64, words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, words))
}

/// Rademacher probe vectors (+1/-1 entries), keyed by
/// `(seed, sample_index, step_index)`.
pub fn rademacher_probes(
    seed: u64,
    sample_index: u64,
    step_index: u64,
    n_probes: usize,
    dim: usize,
) -> Vec<Vec<f64>> {
    use rand::RngCore;
    let mut rng = keyed_rng(seed, &[sample_index, step_index]);
    (0..n_probes)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if rng.next_u32() & 1 == 1 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect()
        })
        .collect()
}
