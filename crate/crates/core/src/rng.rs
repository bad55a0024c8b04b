//! Deterministic random streams.
//!
//! Every impression draws from its own ChaCha stream keyed by
//! `(experiment seed, query index)`, so results never depend on how work is
//! split across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Random stream for one impression of an experiment.
pub fn impression_stream(seed: u64, query_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(query_index);
    rng
}

/// Fair coin flip.
#[inline]
pub fn fair_bit<R: RngCore + ?Sized>(rng: &mut R) -> bool {
    rng.next_u64() >> 63 == 1
}

/// Uniform draw on `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli draw. `p <= 0` never fires and `p >= 1` always fires.
#[inline]
pub fn bernoulli<R: RngCore + ?Sized>(rng: &mut R, p: f64) -> bool {
    unit_f64(rng) < p
}

/// Uniform integer in `lo..=hi`, using rejection to avoid modulo bias.
pub fn uniform_inclusive<R: RngCore + ?Sized>(rng: &mut R, lo: u64, hi: u64) -> u64 {
    debug_assert!(lo <= hi);
    let span = hi - lo;
    if span == u64::MAX {
        return rng.next_u64();
    }
    let range = span + 1;
    let zone = u64::MAX - (u64::MAX % range) - 1;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return lo + x % range;
        }
    }
}
