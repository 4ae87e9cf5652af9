//! Counter-based stream splitting.
//!
//! Every replication `i` under master seed `s` draws from its own ChaCha
//! stream `(s, i)`, so results do not depend on execution order or on how
//! work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Independent generator for replication `index` under `master`.
pub fn stream(master: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Derive a child master seed for a named sub-task.
pub fn derive(master: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
