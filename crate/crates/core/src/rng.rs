//! Counter-based random streams.
//!
//! Every random quantity in the crate is a pure function of a 64-bit key and
//! a counter. Environments use the site index as the counter, walk noise uses
//! the step index, and experiment trials derive their keys from
//! `(master seed, purpose, trial index)`. Nothing depends on the order in
//! which values are requested, so results are identical under any
//! scheduling of trials across workers.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 output function.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a derived seed is used for. Distinct purposes never share streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Environment = 1,
    Noise = 2,
    Stable = 3,
    Conditioning = 4,
    Reference = 5,
}

/// Seed for trial `index` of the given purpose under `master`.
pub fn derive_seed(master: u64, purpose: Purpose, index: u64) -> u64 {
    let domain = mix64(master ^ mix64(purpose as u64));
    mix64(domain.wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Random-access stream of 64-bit words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterStream {
    key: u64,
}

impl CounterStream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x6A09_E667_F3BC_C909),
        }
    }

    #[inline(always)]
    pub fn word(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform on `(0, 1]`.
    #[inline(always)]
    pub fn uniform_open_closed(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) + 1) as f64 * TWO_POW_MINUS_53
    }

    /// Uniform on `(0, 1)`, never touching either endpoint.
    #[inline(always)]
    pub fn uniform_open(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) as f64 + 0.5) * TWO_POW_MINUS_53
    }

    /// Mean-one exponential, strictly positive.
    #[inline(always)]
    pub fn exponential(&self, counter: u64) -> f64 {
        -self.uniform_open(counter).ln()
    }
}

/// Top 53 bits of a word compared against this threshold give a Bernoulli(p)
/// draw. Dyadic probabilities such as 3/4 are represented exactly.
#[inline]
pub fn bernoulli_threshold(p: f64) -> u64 {
    (p.clamp(0.0, 1.0) * (1u64 << 53) as f64) as u64
}

/// Sequential generator over a [`CounterStream`], for use with `rand`
/// distributions.
#[derive(Debug, Clone)]
pub struct CounterRng {
    stream: CounterStream,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            stream: CounterStream::new(seed),
            counter: 0,
        }
    }

    pub fn position(&self) -> u64 {
        self.counter
    }

    /// Uniform on `(0, 1)`.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        let u = self.stream.uniform_open(self.counter);
        self.counter += 1;
        u
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let w = self.stream.word(self.counter);
        self.counter += 1;
        w
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
