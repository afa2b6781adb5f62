//! Counter-based random streams.
//!
//! Every stream is addressed by `(seed, label, index)`: the seed and label
//! form the ChaCha key and the index selects the ChaCha stream, so draw `k`
//! of a stream is fixed regardless of what other streams were consumed or
//! in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Opens the stream `(seed, label, index)`, positioned at draw 0.
pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let l = fnv1a(label.as_bytes());
    let mut key = [0u8; 32];
    let words = [splitmix(seed), splitmix(seed ^ l), splitmix(l), splitmix(seed.rotate_left(32) ^ l)];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
