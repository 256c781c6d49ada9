//! The random environment of trap depths.
//!
//! Depth at site `x` is computed from a counter-based uniform keyed on
//! `(env_seed, x)`, so any window of sites can be evaluated lazily, in any
//! order, by any number of readers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterStream;

/// Read access to trap depths.
pub trait Depths: Sync {
    fn depth(&self, x: i64) -> f64;
}

/// User-supplied depth law: inverse survival function and survival function.
/// Both receive the tail exponent as their second argument.
#[derive(Clone, Copy)]
pub struct CustomLaw {
    pub from_uniform: fn(f64, f64) -> f64,
    pub survival: fn(f64, f64) -> f64,
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomLaw")
    }
}

impl PartialEq for CustomLaw {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::fn_addr_eq(self.from_uniform, other.from_uniform)
            && std::ptr::fn_addr_eq(self.survival, other.survival)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DepthLaw {
    /// `P(τ ≥ u) = u^{-α}` for `u ≥ 1`.
    #[default]
    Pareto,
    /// Pareto plus an independent uniform on `[0, bound]`. Same tail as
    /// Pareto, different bulk.
    ParetoPlusUniform { bound: f64 },
    /// Every site has the same depth.
    Constant { depth: f64 },
    #[serde(skip)]
    Custom(CustomLaw),
}

impl DepthLaw {
    /// `P(τ ≥ u)`.
    pub fn survival(&self, u: f64, alpha: f64) -> f64 {
        match *self {
            DepthLaw::Pareto => pareto_survival(u, alpha),
            DepthLaw::ParetoPlusUniform { bound } => {
                if bound <= 0.0 {
                    return pareto_survival(u, alpha);
                }
                // ∫_0^1 P(Pareto ≥ u - b s) ds, split where u - b s drops to 1.
                let split = ((u - 1.0) / bound).clamp(0.0, 1.0);
                let tail = if split > 0.0 {
                    let one_minus = 1.0 - alpha;
                    (u.powf(one_minus) - (u - bound * split).powf(one_minus)) / (bound * one_minus)
                } else {
                    0.0
                };
                tail + (1.0 - split)
            }
            DepthLaw::Constant { depth } => {
                if depth >= u {
                    1.0
                } else {
                    0.0
                }
            }
            DepthLaw::Custom(c) => (c.survival)(u, alpha),
        }
    }
}

#[inline]
pub fn pareto_survival(u: f64, alpha: f64) -> f64 {
    if u <= 1.0 {
        1.0
    } else {
        u.powf(-alpha)
    }
}

/// Inverse survival transform of a uniform on `(0, 1]`: `U^{-1/α}`.
#[inline]
pub fn pareto_from_uniform(u: f64, alpha: f64) -> f64 {
    InversePower::new(alpha).apply(u)
}

/// Depth at site `x` of the default Pareto environment with seed `env_seed`.
pub fn sample_depth(env_seed: u64, x: i64, alpha: f64) -> f64 {
    pareto_from_uniform(CounterStream::new(env_seed).uniform_open_closed(x as u64), alpha)
}

/// Fast inverse-power evaluation; exact integer powers when `1/α` is one.
#[derive(Debug, Clone, Copy, PartialEq)]
struct InversePower {
    exponent: f64,
    integer: Option<i32>,
}

impl InversePower {
    fn new(alpha: f64) -> Self {
        let exponent = 1.0 / alpha;
        let rounded = exponent.round();
        let integer = ((exponent - rounded).abs() < 1e-12 && rounded <= 16.0).then_some(rounded as i32);
        Self { exponent, integer }
    }

    #[inline(always)]
    fn apply(&self, u: f64) -> f64 {
        match self.integer {
            Some(k) => 1.0 / u.powi(k),
            None => u.powf(-self.exponent),
        }
    }
}

/// Deterministic map from sites to depths.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    alpha: f64,
    env_seed: u64,
    law: DepthLaw,
    stream: CounterStream,
    extra: CounterStream,
    power: InversePower,
    pins: Arc<BTreeMap<i64, f64>>,
}

impl Environment {
    pub fn new(alpha: f64, env_seed: u64, law: DepthLaw) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ParameterDomain {
                field: "alpha",
                value: alpha,
                domain: "(0, 1)",
            });
        }
        match law {
            DepthLaw::Constant { depth } if !(depth > 0.0) => {
                return Err(Error::ParameterDomain {
                    field: "depth",
                    value: depth,
                    domain: "(0, ∞)",
                })
            }
            DepthLaw::ParetoPlusUniform { bound } if !(bound >= 0.0) => {
                return Err(Error::ParameterDomain {
                    field: "bound",
                    value: bound,
                    domain: "[0, ∞)",
                })
            }
            _ => {}
        }
        Ok(Self {
            alpha,
            env_seed,
            law,
            stream: CounterStream::new(env_seed),
            extra: CounterStream::new(env_seed ^ 0xA5A5_5A5A_C3C3_3C3C),
            power: InversePower::new(alpha),
            pins: Arc::new(BTreeMap::new()),
        })
    }

    pub fn pareto(alpha: f64, env_seed: u64) -> Result<Self> {
        Self::new(alpha, env_seed, DepthLaw::Pareto)
    }

    /// Overrides the depth at `x`.
    pub fn with_pin(mut self, x: i64, depth: f64) -> Self {
        Arc::make_mut(&mut self.pins).insert(x, depth);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn env_seed(&self) -> u64 {
        self.env_seed
    }
    pub fn law(&self) -> DepthLaw {
        self.law
    }
    pub fn pins(&self) -> &BTreeMap<i64, f64> {
        &self.pins
    }

    /// `P(τ ≥ u)` under the environment's law, ignoring pins.
    pub fn survival(&self, u: f64) -> f64 {
        self.law.survival(u, self.alpha)
    }

    #[inline(always)]
    fn law_depth(&self, x: i64) -> f64 {
        match self.law {
            DepthLaw::Pareto => self.power.apply(self.stream.uniform_open_closed(x as u64)),
            DepthLaw::ParetoPlusUniform { bound } => {
                self.power.apply(self.stream.uniform_open_closed(x as u64)) + bound * self.extra.uniform_open(x as u64)
            }
            DepthLaw::Constant { depth } => depth,
            DepthLaw::Custom(c) => (c.from_uniform)(self.stream.uniform_open_closed(x as u64), self.alpha),
        }
    }

    /// Sites in `lo..=hi` with depth at least `threshold`, in increasing order.
    pub fn sites_at_least(&self, lo: i64, hi: i64, threshold: f64) -> Vec<i64> {
        let mut out = Vec::new();
        if lo > hi {
            return out;
        }
        if matches!(self.law, DepthLaw::Pareto) && threshold > 1.0 {
            // τ ≥ threshold iff U ≤ threshold^{-α}; confirm candidates exactly.
            let cut = threshold.powf(-self.alpha) * (1.0 + 1e-9);
            for x in lo..=hi {
                if self.stream.uniform_open_closed(x as u64) <= cut && self.law_depth(x) >= threshold {
                    out.push(x);
                }
            }
            if !self.pins.is_empty() {
                out.retain(|x| !self.pins.contains_key(x));
                for (&x, &d) in self.pins.range(lo..=hi) {
                    if d >= threshold {
                        out.push(x);
                    }
                }
                out.sort_unstable();
            }
        } else {
            out.extend((lo..=hi).filter(|&x| self.depth(x) >= threshold));
        }
        out
    }

    /// Materialises depths for `lo..=hi`.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|x| self.depth(x)).collect()
    }
}

impl Depths for Environment {
    #[inline(always)]
    fn depth(&self, x: i64) -> f64 {
        if !self.pins.is_empty() {
            if let Some(&d) = self.pins.get(&x) {
                return d;
            }
        }
        self.law_depth(x)
    }
}

impl<D: Depths + ?Sized> Depths for &D {
    #[inline(always)]
    fn depth(&self, x: i64) -> f64 {
        (**self).depth(x)
    }
}

/// A base environment with one site overridden, without cloning the base.
#[derive(Debug, Clone, Copy)]
pub struct PinnedSite<'a, D: ?Sized> {
    pub base: &'a D,
    pub site: i64,
    pub depth: f64,
}

impl<D: Depths + ?Sized> Depths for PinnedSite<'_, D> {
    #[inline(always)]
    fn depth(&self, x: i64) -> f64 {
        if x == self.site {
            self.depth
        } else {
            self.base.depth(x)
        }
    }
}

/// Explicit depths on `offset..offset+len`, constant `outside` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDepths {
    pub offset: i64,
    pub values: Vec<f64>,
    pub outside: f64,
}

impl Depths for WindowDepths {
    #[inline(always)]
    fn depth(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i >= 0 && (i as usize) < self.values.len() {
            self.values[i as usize]
        } else {
            self.outside
        }
    }
}

const CACHE_BITS: u32 = 12;

/// Direct-mapped cache in front of a depth source. The walk is local, so a
/// few thousand slots cover every revisit in practice.
pub struct DepthCache<D> {
    source: D,
    tags: Vec<i64>,
    values: Vec<f64>,
    mask: i64,
}

impl<D: Depths> DepthCache<D> {
    pub fn new(source: D) -> Self {
        Self::with_bits(source, CACHE_BITS)
    }

    /// A cache with `2^bits` slots.
    pub fn with_bits(source: D, bits: u32) -> Self {
        let n = 1usize << bits;
        Self {
            source,
            tags: vec![i64::MIN; n],
            values: vec![0.0; n],
            mask: (n - 1) as i64,
        }
    }

    #[inline(always)]
    pub fn get(&mut self, x: i64) -> f64 {
        let slot = (x & self.mask) as usize;
        if self.tags[slot] == x {
            self.values[slot]
        } else {
            let d = self.source.depth(x);
            self.tags[slot] = x;
            self.values[slot] = d;
            d
        }
    }

    pub fn source(&self) -> &D {
        &self.source
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_transform_examples() {
        assert_eq!(pareto_from_uniform(1.0, 0.5), 1.0);
        assert_relative_eq!(pareto_from_uniform(0.25, 0.5), 16.0, epsilon = 1e-12);
        assert_relative_eq!(InversePower::new(0.5).apply(0.25), 16.0, epsilon = 1e-12);
        assert_relative_eq!(
            InversePower::new(0.3).apply(0.25),
            0.25f64.powf(-1.0 / 0.3),
            max_relative = 1e-14
        );
    }

    #[test]
    fn depth_is_pure_function_of_seed_and_site() {
        let env = Environment::pareto(0.5, 99).unwrap();
        let forward: Vec<f64> = (-1000..=1000).map(|x| env.depth(x)).collect();
        let backward: Vec<f64> = (-1000..=1000).rev().map(|x| env.depth(x)).collect();
        assert!(forward
            .iter()
            .zip(backward.iter().rev())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        let mut hopping = vec![0.0; 2001];
        for i in (0..2001).map(|k| (k * 7919) % 2001) {
            hopping[i] = env.depth(i as i64 - 1000);
        }
        assert!(forward.iter().zip(&hopping).all(|(a, b)| a.to_bits() == b.to_bits()));
        for (i, x) in (-1000..=1000).enumerate() {
            assert_eq!(sample_depth(99, x, 0.5).to_bits(), forward[i].to_bits());
        }
        assert!(forward.iter().all(|&d| d >= 1.0));
    }

    #[test]
    fn tail_fraction_at_ten() {
        let env = Environment::pareto(0.5, 2024).unwrap();
        let m = 1_000_000;
        let hits = (0..m).filter(|&x| env.depth(x) >= 10.0).count() as f64;
        let p = 10f64.powf(-0.5);
        let se = (p * (1.0 - p) / m as f64).sqrt();
        assert!((hits / m as f64 - p).abs() < 3.0 * se, "{}", hits / m as f64);
    }

    #[test]
    fn pins_and_constant_law() {
        let env = Environment::new(0.5, 1, DepthLaw::Constant { depth: 1.0 })
            .unwrap()
            .with_pin(5, 100.0);
        assert_eq!(env.depth(4), 1.0);
        assert_eq!(env.depth(5), 100.0);
        assert_eq!(env.sites_at_least(0, 10, 2.0), vec![5]);
    }

    #[test]
    fn fast_scan_agrees_with_depths() {
        let env = Environment::pareto(0.4, 5).unwrap().with_pin(17, 1e9).with_pin(3, 1.0);
        let g = 50.0;
        let fast = env.sites_at_least(-20, 50_000, g);
        let slow: Vec<i64> = (-20..=50_000).filter(|&x| env.depth(x) >= g).collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn plus_uniform_survival_matches_sampling() {
        let law = DepthLaw::ParetoPlusUniform { bound: 3.0 };
        let env = Environment::new(0.5, 8, law).unwrap();
        let m = 400_000;
        for u in [2.0, 4.0, 20.0] {
            let frac = (0..m).filter(|&x| env.depth(x) >= u).count() as f64 / m as f64;
            let p = law.survival(u, 0.5);
            let se = (p * (1.0 - p) / m as f64).sqrt();
            assert!((frac - p).abs() < 4.0 * se, "u={u}: {frac} vs {p}");
        }
        // same tail as Pareto
        let far = 1e12;
        assert_relative_eq!(law.survival(far, 0.5) * far.sqrt(), 1.0, max_relative = 1e-4);
    }

    #[test]
    fn custom_law_hook() {
        fn inv(u: f64, a: f64) -> f64 {
            2.0 * u.powf(-1.0 / a)
        }
        fn surv(u: f64, a: f64) -> f64 {
            if u <= 2.0 {
                1.0
            } else {
                (u / 2.0).powf(-a)
            }
        }
        let law = DepthLaw::Custom(CustomLaw {
            from_uniform: inv,
            survival: surv,
        });
        let env = Environment::new(0.5, 3, law).unwrap();
        assert!((0..1000).all(|x| env.depth(x) >= 2.0));
        assert_eq!(env.survival(8.0), 0.5);
    }

    #[test]
    fn cache_matches_source() {
        let env = Environment::pareto(0.5, 77).unwrap();
        let mut cache = DepthCache::new(&env);
        for x in [0i64, 1, 4096, 0, -4096, 5, 4101, 5, -1] {
            assert_eq!(cache.get(x).to_bits(), env.depth(x).to_bits());
        }
    }
}
