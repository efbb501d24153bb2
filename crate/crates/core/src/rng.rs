//! Counter-based random streams.
//!
//! Every replicate draws from its own ChaCha8 stream whose key is derived
//! from `(master seed, tag)` and whose 64-bit stream id is the replicate
//! index. Streams are independent of scheduling, so parallel runs reproduce
//! sequential ones bit for bit.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// 2^-53, the spacing of the uniforms produced by [`open_unit_index`].
pub const UNIT: f64 = 1.0 / 9_007_199_254_740_992.0;

/// 2^53.
pub const UNIT_SCALE: u64 = 1 << 53;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Stream `index` of the family named `tag` under `seed`.
pub fn stream(seed: u64, tag: &str, index: u64) -> Stream {
    let mut state = seed ^ fnv1a(tag.as_bytes()).rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Integer `k` in `[1, 2^53)`; `k * 2^-53` is uniform on the open unit
/// interval. Samplers that invert closed-form tails use `k` directly so the
/// inversion can be done in integer arithmetic.
pub fn open_unit_index<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    loop {
        let k = rng.next_u64() >> 11;
        if k != 0 {
            return k;
        }
    }
}

/// Uniform on `(0, 1)`.
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    open_unit_index(rng) as f64 * UNIT
}

/// `Exp(1)` by inversion.
pub fn exp1<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -open_unit(rng).ln()
}

/// Uniform index in `0..len`.
pub fn index<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> usize {
    rng.random_range(0..len)
}
