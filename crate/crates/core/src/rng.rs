//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by the
//! user seed. Independent consumers (one per class and interval, one per
//! guidance center, ...) get their own ChaCha stream id, derived from a
//! stable 64-bit FNV-1a hash of a textual key. Results therefore do not
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Builder for a stream key. Parts are separated by a 0xff byte, which never
/// occurs in UTF-8 text, so `("ab", "c")` and `("a", "bc")` differ.
#[derive(Debug, Clone)]
pub struct StreamKey {
    hash: u64,
}

impl StreamKey {
    pub fn new(domain: &str) -> Self {
        let mut key = StreamKey { hash: FNV_OFFSET };
        key.absorb(domain.as_bytes());
        key
    }

    pub fn part(mut self, text: &str) -> Self {
        self.absorb(&[0xff]);
        self.absorb(text.as_bytes());
        self
    }

    pub fn index(mut self, value: u64) -> Self {
        self.absorb(&[0xff]);
        self.absorb(&value.to_le_bytes());
        self
    }

    pub fn id(&self) -> u64 {
        self.hash
    }

    fn absorb(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.hash ^= u64::from(b);
            self.hash = self.hash.wrapping_mul(FNV_PRIME);
        }
    }
}

/// Generator for `seed` positioned on the stream selected by `key`.
pub fn substream(seed: u64, key: &StreamKey) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key.id());
    rng
}
