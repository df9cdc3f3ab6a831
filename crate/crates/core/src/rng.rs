//! Counter-based random streams.
//!
//! Every trajectory owns a ChaCha8 stream keyed by the run seed and selected
//! by the trajectory index, so any trajectory can be regenerated in isolation
//! and no worker ever needs to coordinate with another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tags keep independent uses of one user seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    Trajectory = 1,
    Bootstrap = 2,
    Couplings = 3,
    Path = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Factory for per-index streams.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    key: [u8; 32],
}

impl StreamFamily {
    pub fn new(seed: u64, domain: StreamDomain) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed ^ (domain as u64).rotate_left(32);
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        Self { key }
    }

    /// Independent stream number `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Cauchy variate by inverse CDF: `center + half_width * tan(pi (u - 1/2))`.
#[inline]
pub fn sample_cauchy<R: Rng + ?Sized>(rng: &mut R, center: f64, half_width: f64) -> f64 {
    let u: f64 = rng.random();
    center + half_width * (std::f64::consts::PI * (u - 0.5)).tan()
}

#[inline]
pub fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
