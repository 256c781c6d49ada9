//! The stepping kernel shared by every simulation.
//!
//! Step `k` draws its direction from word `2k` and its exponential mark
//! from word `2k + 1` of the noise stream, so the whole path is a pure
//! function of the environment and the noise seed.

use crate::model::{DepthCache, Depths, ModelParams};
use crate::rng::{bernoulli_threshold, CounterStream};

/// One embedded step: the walker held at `from` for `hold`, then moved to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub index: u64,
    pub from: i64,
    pub to: i64,
    pub depth: f64,
    pub hold: f64,
}

/// Marks of step `k`: `(up, e_k)`.
#[inline(always)]
pub fn step_noise(noise: &CounterStream, threshold: u64, k: u64) -> (bool, f64) {
    let up = (noise.word(2 * k) >> 11) < threshold;
    (up, noise.exponential(2 * k + 1))
}

/// Streaming walker over a depth source.
pub struct Walker<D> {
    depths: DepthCache<D>,
    noise: CounterStream,
    threshold: u64,
    walls: Option<(i64, i64)>,
    pos: i64,
    steps: u64,
    clock: f64,
}

impl<D: Depths> Walker<D> {
    pub fn new(depths: D, params: &ModelParams, noise_seed: u64) -> Self {
        Self::starting_at(depths, params, noise_seed, 0)
    }

    pub fn starting_at(depths: D, params: &ModelParams, noise_seed: u64, start: i64) -> Self {
        Self::build(DepthCache::new(depths), params, noise_seed, start)
    }

    /// A walker with a small depth cache, cheap to create, for passages
    /// confined to a few hundred sites.
    pub fn local(depths: D, params: &ModelParams, noise_seed: u64, start: i64) -> Self {
        Self::build(DepthCache::with_bits(depths, 8), params, noise_seed, start)
    }

    fn build(depths: DepthCache<D>, params: &ModelParams, noise_seed: u64, start: i64) -> Self {
        Self {
            depths,
            noise: CounterStream::new(noise_seed),
            threshold: bernoulli_threshold(params.p()),
            walls: None,
            pos: start,
            steps: 0,
            clock: 0.0,
        }
    }

    /// Reflect at `lo` and `hi`: a blocked jump is replaced by the only
    /// allowed one, at the same total rate.
    pub fn with_walls(mut self, lo: i64, hi: i64) -> Self {
        assert!(lo < hi && (lo..=hi).contains(&self.pos));
        self.walls = Some((lo, hi));
        self
    }

    pub fn position(&self) -> i64 {
        self.pos
    }
    pub fn steps(&self) -> u64 {
        self.steps
    }
    /// `S(k)` for the current step count `k`.
    pub fn clock(&self) -> f64 {
        self.clock
    }
    pub fn depth(&mut self, x: i64) -> f64 {
        self.depths.get(x)
    }

    #[inline(always)]
    pub fn step(&mut self) -> Step {
        let k = self.steps;
        let (up, e) = step_noise(&self.noise, self.threshold, k);
        let from = self.pos;
        let depth = self.depths.get(from);
        let hold = depth * e;
        let mut to = if up { from + 1 } else { from - 1 };
        if let Some((lo, hi)) = self.walls {
            if from == lo {
                to = lo + 1;
            } else if from == hi {
                to = hi - 1;
            }
        }
        self.pos = to;
        self.steps = k + 1;
        self.clock += hold;
        Step {
            index: k,
            from,
            to,
            depth,
            hold,
        }
    }

    /// Steps until the walker stands on `target`. Returns `false` if the
    /// budget on the total step count ran out first.
    pub fn run_to(&mut self, target: i64, budget: u64) -> bool {
        while self.pos != target {
            if self.steps >= budget {
                return false;
            }
            self.step();
        }
        true
    }

    pub fn noise(&self) -> &CounterStream {
        &self.noise
    }
}
