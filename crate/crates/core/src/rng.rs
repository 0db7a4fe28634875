//! Seeded random number streams.
//!
//! Every chain and every temperature level within a chain owns its own
//! stream, derived from a shared 64-bit seed and a stream id. A stream's
//! draws depend only on `(seed, stream_id)`, so the order in which chains
//! are scheduled across threads cannot change any result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream slot reserved for swap decisions, trajectory acceptance and
/// subsample draws of a chain.
pub const CONTROL_SLOT: u32 = 0xFFFF_0000;
/// Stream slot used to draw chain starting points.
pub const INIT_SLOT: u32 = 0xFFFF_0001;
/// Pseudo chain index whose slots are used for data simulation.
pub const DATA_CHAIN: u32 = u32::MAX;

/// A reproducible, single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    /// Stream for `slot` of chain `chain`; level kernels use `slot = level`.
    pub fn for_chain(seed: u64, chain: u32, slot: u32) -> Self {
        Self::new(seed, stream_id(chain, slot))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(self)
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, self)
    }
}

pub fn stream_id(chain: u32, slot: u32) -> u64 {
    ((chain as u64) << 32) | slot as u64
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
