//! Deterministic labeled substreams derived from a single 64-bit seed.
//!
//! Every source of randomness in the crate (positions, fading draws, Monte
//! Carlo samples, solver initialization) pulls its own named substream so
//! that experiments reproduce bit-identically regardless of evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based derivation of a ChaCha stream keyed by `(seed, label)`.
pub fn substream(seed: u64, label: &str) -> ChaCha12Rng {
    let mut state = seed;
    for chunk in label.as_bytes().chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state ^= u64::from_le_bytes(word).rotate_left(17);
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for lane in key.chunks_exact_mut(8) {
        lane.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Per-trial seed derivation for parallel experiment loops.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut state = seed ^ trial.wrapping_mul(0xa24b_aed4_963e_e407);
    splitmix64(&mut state)
}
