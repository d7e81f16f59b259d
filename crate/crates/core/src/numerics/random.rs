//! Seeded, splittable random streams.
//!
//! A [`RandomStream`] is a ChaCha8 generator keyed by a 64-bit seed and a
//! stream id. ChaCha is counter based, so distinct stream ids yield
//! independent sequences and nested Monte Carlo loops can each own one.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed used when a caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_100_511;

/// Identity of a random stream; cheap to copy and serialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub stream_id: u64,
}

/// A reproducible random number stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    key: StreamKey,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            key: StreamKey { seed, stream_id },
            rng,
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Derives an independent child stream; the same `(self.key, index)`
    /// always yields the same child, regardless of how much of the parent
    /// has been consumed.
    pub fn substream(&self, index: u64) -> RandomStream {
        let id = splitmix64(self.key.stream_id ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        RandomStream::new(self.key.seed, id)
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            // 53 random bits, shifted off zero
            let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }

    /// `n` stratified uniforms: one draw inside each cell ((i, i+1) / n),
    /// returned in cell order.
    pub fn stratified(&mut self, n: usize) -> Vec<f64> {
        let inv = 1.0 / n as f64;
        (0..n).map(|i| (i as f64 + self.open01()) * inv).collect()
    }

    /// Latin hypercube design of `n` points in `dims` dimensions: each
    /// coordinate is stratified and the strata are independently permuted.
    pub fn latin_hypercube(&mut self, n: usize, dims: usize) -> Vec<Vec<f64>> {
        let mut columns: Vec<Vec<f64>> = (0..dims).map(|_| self.stratified(n)).collect();
        for col in columns.iter_mut().skip(1) {
            // Fisher-Yates
            for i in (1..n).rev() {
                let j = self.rng.random_range(0..=i);
                col.swap(i, j);
            }
        }
        (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
