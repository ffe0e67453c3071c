//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, stream id)` and advanced by a block
//! counter, so any trial can be replayed in isolation and trials may run on
//! any thread without sharing generator state.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Number of low bits of a stream id reserved for the lane (which
/// computation inside a trial consumes the stream).
pub const LANE_BITS: u32 = 8;

#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Stream for computation `lane` of trial `trial` under `seed`.
    pub fn for_trial(seed: u64, trial: u64, lane: u8) -> Self {
        Self::new(seed, stream_id(trial, lane))
    }

    /// Fresh stream sharing this generator's seed.
    pub fn split(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on the 53-bit dyadic grid of `[0, 1)`.
    ///
    /// `P(unit() < p) = p` exactly for every `p` that is a multiple of 2^-53.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn stream_id(trial: u64, lane: u8) -> u64 {
    (trial << LANE_BITS) | lane as u64
}

impl RngCore for StreamRng {
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
