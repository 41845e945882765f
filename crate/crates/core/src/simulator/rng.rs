//! Seeding and exponential sampling.
//!
//! Every arrival stream owns a ChaCha8 generator. Its 64-bit seed is
//! `splitmix64(seed ^ splitmix64(replication))` and its ChaCha stream number
//! is `(direction << 32) | ship`, so a draw is fully determined by
//! `(seed, replication, direction, ship)` and never depends on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(seed: u64, replication: u32) -> u64 {
    splitmix64(seed ^ splitmix64(u64::from(replication)))
}

pub fn stream_id(direction: usize, ship: usize) -> u64 {
    ((direction as u64) << 32) | ship as u64
}

pub fn stream_rng(replication_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF exponential draw `-ln(u) / rate` for `u` in (0, 1].
pub fn exponential_from_uniform(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64, SimError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SimError::InvalidRate(rate));
    }
    Ok(draw(rate, rng))
}

/// Unchecked draw for the hot loop; `rate` is validated upstream.
#[inline]
pub(crate) fn draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    exponential_from_uniform(rate, 1.0 - rng.random::<f64>())
}
