//! Counter-based seeding: every (seed, n, trial) triple gets its own
//! independent ChaCha stream, so trials can run in any order on any number of
//! threads and still see the same random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one trial of one experiment cell.
pub fn trial_rng(seed: u64, n: u64, trial: u64) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    state = splitmix64(state ^ n);
    state = splitmix64(state ^ trial);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
