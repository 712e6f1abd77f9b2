//! Seed derivation for reproducible Monte-Carlo streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator (a
//! counter-based stream cipher) seeded with a 64-bit value. Seeds for
//! individual screens, bootstrap resamples and count simulations are derived
//! from a single base seed by folding a tuple of integers through SplitMix64:
//!
//! ```text
//! s0 = splitmix64(base_seed)
//! s(k+1) = splitmix64(s(k) ^ part(k))
//! ```
//!
//! The first part is always a [`Domain`] tag so different consumers never
//! share a stream. A screen seed is `derive(base, [Screen, ell, realization, arm])`,
//! so any single realization of a sweep can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Consumer tags mixed into derived seeds (ASCII of the name).
#[allow(clippy::unusual_byte_groupings)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Screen = 0x5343_5245_454e,
    Bootstrap = 0x424f_4f54,
    Counts = 0x434f_554e_54,
    Crosstalk = 0x5854_414c_4b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    A = 0,
    B = 1,
}

#[inline]
pub const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `base` with SplitMix64.
pub fn derive_seed(base: u64, domain: Domain, parts: &[u64]) -> u64 {
    let mut s = splitmix64(splitmix64(base) ^ domain as u64);
    for &p in parts {
        s = splitmix64(s ^ p);
    }
    s
}

/// Seed of the screen on `arm` for realization `realization` of OAM index `ell`.
pub fn screen_seed(base: u64, ell: i32, realization: usize, arm: Arm) -> u64 {
    derive_seed(
        base,
        Domain::Screen,
        &[ell as i64 as u64, realization as u64, arm as u64],
    )
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
