//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key is expanded from
//! `(master seed, lane)` and whose 64-bit stream id is the replication index.
//! Streams for different lanes or replications never overlap, so replications
//! can run on any thread in any order and still produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Problem instance draws, shared by every policy in a replication.
pub const LANE_INSTANCE: u64 = 0x696e_7374;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `(master, lane, replication)`.
pub fn stream(master: u64, lane: u64, replication: u64) -> StreamRng {
    let mut state = master ^ lane.rotate_left(32).wrapping_mul(0xd6e8_feb8_6659_fd93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replication);
    rng
}

/// Stable lane id for a textual label (FNV-1a).
pub fn lane_for(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Generator seeded from a single 64-bit value, for one-shot Monte Carlo estimates.
pub fn seeded(seed: u64) -> StreamRng {
    stream(seed, 0x6d63, 0)
}
