//! Seeded, splittable random streams.
//!
//! Every consumer derives an independent ChaCha8 stream from
//! `(seed, domain, index)`: the seed and a domain tag select the key, the
//! index selects the ChaCha stream. Results therefore never depend on the
//! order in which pixels, trees or folds are processed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const DOMAIN_SPECKLE: u64 = 1;
pub const DOMAIN_OPTICAL: u64 = 2;
pub const DOMAIN_TREE: u64 = 3;
pub const DOMAIN_FOLDS: u64 = 4;
pub const DOMAIN_SUBSAMPLE: u64 = 5;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(domain)));
    rng.set_stream(index);
    rng
}

/// Circular complex Gaussian with unit variance: real and imaginary parts
/// are independent `N(0, 1/2)`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}
