//! Portable seeded random streams.
//!
//! Every random draw in the lab comes from a [`GaussianRng`]: the ChaCha20
//! stream cipher keyed by a 64-bit master seed (little-endian in the first
//! eight key bytes, remaining bytes zero) and a 64-bit stream id. ChaCha20 is
//! counter based, so distinct stream ids never overlap. Uniform doubles take
//! the top 53 bits of each 64-bit word; normals use the Box-Muller transform
//! and consume both outputs of each pair.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use std::f64::consts::TAU;

/// Name written into every file that depends on generated randomness.
pub const GENERATOR_NAME: &str = "chacha20-boxmuller";
/// Bumped whenever the mapping from (seed, stream) to values changes.
pub const GENERATOR_VERSION: u32 = 1;

/// What a stream is used for. Forms the top byte of the stream id so that
/// different consumers of one master seed never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Codebook = 1,
    TrainData = 2,
    TestData = 3,
    Init = 4,
    Shuffle = 5,
    Sweep = 6,
    Channel = 7,
    Timing = 8,
}

/// Builds a stream id from a purpose and two sub-indices
/// (`major` keeps its low 24 bits, `minor` its low 32 bits).
pub fn stream_id(purpose: Purpose, major: u64, minor: u64) -> u64 {
    ((purpose as u64) << 56) | ((major & 0xFF_FFFF) << 32) | (minor & 0xFFFF_FFFF)
}

#[derive(Debug, Clone)]
pub struct GaussianRng {
    core: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut core = ChaCha20Rng::from_seed(key);
        core.set_stream(stream);
        Self { core, spare: None }
    }

    pub fn for_purpose(seed: u64, purpose: Purpose, major: u64, minor: u64) -> Self {
        Self::new(seed, stream_id(purpose, major, minor))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (z0, z1) = self.normal_pair();
        self.spare = Some(z1);
        z0
    }

    /// One Box-Muller pair. Discards any cached spare so pairs stay aligned.
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        self.spare = None;
        // 1 - U lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (r * c, r * s)
    }

    /// Unbiased integer in [0, n) (Lemire's multiply-and-reject). `n` must be nonzero.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
