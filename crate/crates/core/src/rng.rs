//! Seeded, splittable random streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic pseudo-random stream.
///
/// A stream is identified by a 64-bit key and a ChaCha stream number.
/// [`RngStream::substream`] derives a child whose key mixes the parent's
/// key and stream number, so substreams of substreams stay distinct. The
/// outputs depend only on the seed and the call sequence, never on which
/// thread drives the stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::keyed(seed, 0)
    }

    fn keyed(key: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(key);
        inner.set_stream(stream);
        RngStream { key, stream, inner }
    }

    /// Independent child stream number `index`. Does not advance `self`.
    pub fn substream(&self, index: u64) -> Self {
        Self::keyed(splitmix64(self.key ^ splitmix64(self.stream)), index)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
