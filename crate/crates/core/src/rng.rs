//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha stream derived from an
//! explicit `u64` seed plus a label, so environment draws and policy draws
//! never share a stream and coupled comparisons across policies are possible.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::scalar::Scalar;

/// Mixes a base seed with a stream label into a fresh substream seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer over the xor.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic substream for `(seed, label)`.
pub fn derive_rng(seed: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(seed, label))
}

/// One standard normal draw, widened from an `f64` sample.
pub fn standard_normal<S: Scalar, R: Rng + ?Sized>(rng: &mut R) -> S {
    S::cast(rng.sample::<f64, _>(rand_distr::StandardNormal))
}

/// A vector of independent standard normal draws.
pub fn standard_normal_vec<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<S> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

/// Uniform draw in `[0, 1)`.
pub fn uniform_01<S: Scalar>(rng: &mut (impl RngCore + ?Sized)) -> S {
    S::cast(rng.random::<f64>())
}
