//! Random number plumbing.
//!
//! Parameter draws come from a ChaCha8 stream seeded with the simulation
//! seed. Per-voxel texture noise comes from [`CounterRng`], a counter-based
//! generator: the value at counter `n` depends only on `(key, n)`, so any
//! subset of voxels can be generated in any order, on any number of threads,
//! and still match the full image bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type ParamRng = ChaCha8Rng;

pub fn param_rng(seed: u64) -> ParamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 evaluated at an arbitrary position: output `n` is
/// `mix64(key + (n + 1)·γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    #[inline]
    pub fn bits(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in (0, 1].
    #[inline]
    pub fn uniform_open0(&self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal sample for `index`, by the cosine branch of the
    /// Box–Muller transform on counters `2·index` and `2·index + 1`.
    #[inline]
    pub fn standard_normal(&self, index: u64) -> f64 {
        let u1 = self.uniform_open0(2 * index);
        let u2 = self.uniform_open0(2 * index + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Seed for draw `draw` of subject `subject_id` in a batch started with
/// `base`: the first 8 bytes (little-endian) of
/// `SHA-256(base as 8 LE bytes ‖ subject_id bytes ‖ 0x00 ‖ draw as 8 LE bytes)`.
pub fn derive_seed(base: u64, subject_id: &str, draw: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(subject_id.as_bytes());
    h.update([0u8]);
    h.update(draw.to_le_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}
