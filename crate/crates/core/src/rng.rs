//! Named random substreams derived from one master seed.
//!
//! Every consumer of randomness asks for a stream by a structured name such
//! as `["run", "3", "treatment", "reserve-0.5", "role", "reserve"]`. The name
//! is hashed to a ChaCha stream id, so streams never overlap and adding a new
//! consumer does not perturb existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Stable 64-bit id for a structured stream name.
pub fn stream_id(parts: &[&str]) -> u64 {
    let mut hash = FNV_OFFSET;
    for part in parts {
        hash = fnv1a(part.as_bytes(), hash);
        // separator so ["ab","c"] and ["a","bc"] differ
        hash = fnv1a(&[0x1f], hash);
    }
    hash
}

/// Deterministic generator for `(master_seed, name)`.
pub fn substream(master_seed: u64, parts: &[&str]) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(parts));
    rng
}
