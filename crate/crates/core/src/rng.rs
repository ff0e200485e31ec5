//! Seeded random streams. Every random draw in the crate comes from a
//! ChaCha8 stream keyed by an explicit 64-bit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn standard_normal_vec(rng: &mut SeededRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform sample from the Euclidean ball of `radius` around `center`.
pub fn sample_ball(rng: &mut SeededRng, center: &[f64], radius: f64) -> Vec<f64> {
    let dim = center.len();
    let dir = standard_normal_vec(rng, dim);
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim.max(1) as f64);
    let scale = if norm > 0.0 { r / norm } else { 0.0 };
    center.iter().zip(dir).map(|(c, d)| c + scale * d).collect()
}
