use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deterministic uniform generator keyed by `(seed, stream_id)`.
///
/// Backed by ChaCha8, a counter-based cipher: the state is the key, the
/// stream number and a block counter, so any number of streams can be
/// created independently without coordination.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

pub fn rng_stream(seed: u64, stream_id: u64) -> RngStream {
    let mut inner = ChaCha8Rng::seed_from_u64(seed);
    inner.set_stream(stream_id);
    RngStream(inner)
}

impl RngStream {
    /// Uniform draw on [0, 1) with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Number of set bits among `count` fresh random bits.
    pub fn count_ones(&mut self, count: u64) -> u64 {
        let mut remaining = count;
        let mut ones = 0u64;
        while remaining >= 64 {
            ones += u64::from(self.0.next_u64().count_ones());
            remaining -= 64;
        }
        if remaining > 0 {
            let mask = (1u64 << remaining) - 1;
            ones += u64::from((self.0.next_u64() & mask).count_ones());
        }
        ones
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Stable 64-bit FNV-1a hash; used to derive stream ids from names.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in s.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Combine two words into a well-mixed id (splitmix64 finalizer).
pub fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(a << 6).wrapping_add(a >> 2);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
