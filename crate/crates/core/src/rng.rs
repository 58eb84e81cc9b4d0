//! Deterministic random streams keyed by `(master_seed, stream_id)`.
//!
//! Each stream is a ChaCha8 keystream: the key is expanded from the master
//! seed and the ChaCha stream word is the stream id, so two ids never share
//! state and the output is identical on every platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Scales the top 53 bits of a `u64` into `[0, 1)`.
const F64_UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
    master_seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = master_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream_id);
        Self {
            inner,
            master_seed,
            stream_id,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * F64_UNIT
    }

    /// Uniform on `[lo, hi)`; returns `lo` when the range is empty.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Packs a domain tag and two indices into a stream id.
///
/// `tag` occupies the top 8 bits, `major` the next 24 and `minor` the low 32.
pub fn stream_key(tag: u8, major: u64, minor: u64) -> u64 {
    debug_assert!(major < 1 << 24, "major index {major} overflows 24 bits");
    debug_assert!(minor < 1 << 32, "minor index {minor} overflows 32 bits");
    ((tag as u64) << 56) | ((major & 0xFF_FFFF) << 32) | (minor & 0xFFFF_FFFF)
}

#[inline]
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
