//! Counter-based randomness shared by every party and every test oracle.
//!
//! # Frozen mapping
//!
//! * `mix64` is the SplitMix64 output finalizer:
//!   `z ^= z >> 30; z *= 0xbf58476d1ce4e5b9; z ^= z >> 27; z *= 0x94d049bb133111eb; z ^= z >> 31`.
//!   It is a bijection on `u64`.
//! * A [`CounterRng`] with key `s` returns, as its `c`-th 64-bit word
//!   (`c = 0, 1, ...`), `mix64(s + (c + 1) * 0x9e3779b97f4a7c15)` (wrapping).
//!   This is exactly the SplitMix64 stream seeded with `s`, addressable at any
//!   counter without generating the prefix.
//! * [`derive_seed`] maps `(master, purpose, trial, repetition)` to
//!   `mix64(mix64(master) ^ (purpose << 56 | repetition << 32 | trial))`,
//!   with `trial < 2^32`, `repetition < 2^24` and `purpose < 2^8`. For a fixed
//!   master seed the packing and `mix64` are both injective, so distinct
//!   tuples never share a stream key.
//! * Normal variates come from `rand_distr::StandardNormal` (ziggurat,
//!   `rand_distr` pinned to 0.5.1) driven by `CounterRng::next_u64`; uniform
//!   `f64` values use the top 53 bits of one word (`rand` 0.9 convention).

use rand::RngCore;

pub const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

const MAX_TRIAL: u64 = 1 << 32;
const MAX_REPETITION: u64 = 1 << 24;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream purposes. The discriminant is the tag used in [`derive_seed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    /// Observation block `(x, y)` drawn from the source.
    Source = 1,
    /// Shared codebook of a one-dimensional test.
    Codebook = 2,
    /// Rademacher projection of a d-dimensional repetition.
    Projection = 3,
    /// Per-trial seed handed down from an experiment master seed.
    Trial = 4,
}

/// Derive a stream key for one `(purpose, trial, repetition)` under `master`.
///
/// Panics if `trial >= 2^32` or `repetition >= 2^24`; those ranges keep the
/// derivation injective.
pub fn derive_seed(master: u64, purpose: Purpose, trial: u64, repetition: u64) -> u64 {
    assert!(trial < MAX_TRIAL, "trial index {trial} exceeds 2^32");
    assert!(repetition < MAX_REPETITION, "repetition index {repetition} exceeds 2^24");
    let packed = ((purpose as u64) << 56) | (repetition << 32) | trial;
    mix64(mix64(master) ^ packed)
}

/// SplitMix64 addressed by counter.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// The `counter`-th word of the stream keyed by `key`.
    #[inline]
    pub fn word_at(key: u64, counter: u64) -> u64 {
        mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn position(&self) -> u64 {
        self.counter
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let w = Self::word_at(self.key, self.counter);
        self.counter = self.counter.wrapping_add(1);
        w
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
