//! Stable subordinator paths and their first-passage inverse.

use rand::RngCore;

use super::sampler::{open01, LnDensityTable, PositiveStable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    alpha: f64,
    grid: Vec<f64>,
    values: Vec<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid);
    }
    Ok(())
}

/// `V_α` on `grid`: independent increments `(t-s)^{1/α} S_α`.
pub fn sample_subordinator<R: RngCore + ?Sized>(alpha: f64, grid: &[f64], rng: &mut R) -> Result<SubordinatorPath> {
    let law = PositiveStable::new(alpha)?;
    check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut v = 0.0;
    for w in grid.windows(2) {
        let s = law.from_parts(open01(rng), -open01(rng).ln());
        v += (w[1] - w[0]).powf(1.0 / alpha) * s;
        values.push(v);
    }
    Ok(SubordinatorPath {
        alpha,
        grid: grid.to_vec(),
        values,
    })
}

impl SubordinatorPath {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Grid estimate of `V^{-1}(t) = inf{u : V(u) > t}`: linear interpolation
    /// across the first grid cell where the path exceeds `t`.
    pub fn inverse_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("level must be >= 0, got {t}")));
        }
        let i = self.values.partition_point(|&v| v <= t);
        if i == self.values.len() {
            return Err(Error::PathExhausted {
                level: t,
                max: *self.values.last().unwrap(),
            });
        }
        if i == 0 {
            return Ok(0.0);
        }
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let (s0, s1) = (self.grid[i - 1], self.grid[i]);
        Ok(s0 + (s1 - s0) * (t - v0) / (v1 - v0))
    }
}

/// Exact sample of `V^{-1}(t)` from its marginal law `(t/S)^α`.
pub fn sample_inverse_marginal<R: RngCore + ?Sized>(alpha: f64, t: f64, rng: &mut R) -> Result<f64> {
    let law = PositiveStable::new(alpha)?;
    let s = law.from_parts(open01(rng), -open01(rng).ln());
    Ok((t / s).powf(alpha))
}

/// Grid-free `V^{-1}(t)` by bisection with conditional increments.
///
/// Builds a fresh [`BisectionSampler`]; reuse one when drawing many samples.
pub fn sample_inverse_bisection<R: RngCore + ?Sized>(alpha: f64, t: f64, tolerance: f64, rng: &mut R) -> Result<f64> {
    BisectionSampler::new(alpha)?.sample(t, tolerance, rng)
}

const TRUNCATION_FLOOR: f64 = 0.05;
const TABLE_POINTS: usize = 2048;

/// Samples `V^{-1}(t)` by bisection. The bracket `[s0, s1]` always satisfies
/// `V(s0) ≤ t < V(s1)`; each split draws `V(mid)` from its law given the two
/// endpoint values, so the result is exact in law up to the time tolerance.
#[derive(Debug, Clone)]
pub struct BisectionSampler {
    law: PositiveStable,
    table: LnDensityTable,
    /// Below this `β`, `P(S < β)` is under [`TRUNCATION_FLOOR`].
    beta_floor: f64,
}

impl BisectionSampler {
    pub fn new(alpha: f64) -> Result<Self> {
        let law = PositiveStable::new(alpha)?;
        let (mut lo, mut hi) = (1e-6f64, 1e6f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if law.cdf(mid) < TRUNCATION_FLOOR {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            law,
            table: LnDensityTable::new(law),
            beta_floor: hi,
        })
    }

    pub fn sample<R: RngCore + ?Sized>(&self, t: f64, tolerance: f64, rng: &mut R) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("level must be >= 0, got {t}")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance must be > 0, got {tolerance}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.law.alpha();
        let inv = 1.0 / alpha;
        let law = self.law;
        let draw = |rng: &mut R| law.from_parts(open01(rng), -open01(rng).ln());

        let (mut s0, mut v0) = (0.0, 0.0);
        let mut s1 = t.powf(alpha).max(tolerance);
        let mut v1 = s1.powf(inv) * draw(rng);
        while v1 <= t {
            let h = s1;
            s0 = s1;
            v0 = v1;
            s1 += h;
            v1 = v0 + h.powf(inv) * draw(rng);
        }
        while s1 - s0 > tolerance {
            let mid = 0.5 * (s0 + s1);
            let c = (0.5 * (s1 - s0)).powf(inv);
            let vm = v0 + c * self.bridge((v1 - v0) / c, rng);
            if vm <= t {
                s0 = mid;
                v0 = vm;
            } else {
                s1 = mid;
                v1 = vm;
            }
        }
        Ok(0.5 * (s0 + s1))
    }

    /// First of two i.i.d. standard stable halves given that they sum to `β`.
    fn bridge<R: RngCore + ?Sized>(&self, beta: f64, rng: &mut R) -> f64 {
        let x = if beta >= self.beta_floor {
            self.by_rejection(beta, rng)
        } else {
            self.by_table(beta, rng)
        };
        x.clamp(0.0, beta)
    }

    /// Proposal: `f` truncated to `(0, β)`, reflected with probability 1/2.
    /// The target `f(s) f(β-s)` is at most `f(β/2) (f(s) + f(β-s))` for a
    /// unimodal `f`.
    fn by_rejection<R: RngCore + ?Sized>(&self, beta: f64, rng: &mut R) -> f64 {
        let ln_cap = self.table.ln_density(0.5 * beta);
        loop {
            let s = loop {
                let s = self.law.from_parts(open01(rng), -open01(rng).ln());
                if s < beta {
                    break s;
                }
            };
            let s = if open01(rng) < 0.5 { s } else { beta - s };
            let (la, lb) = (self.table.ln_density(s), self.table.ln_density(beta - s));
            let hi = la.max(lb);
            // ln[f(s) f(β-s) / (f(s) + f(β-s))]
            let ln_ratio = la + lb - (hi + ((la - hi).exp() + (lb - hi).exp()).ln());
            if open01(rng).ln() <= ln_ratio - ln_cap {
                return s;
            }
        }
    }

    /// Inverse CDF of the conditional density on a midpoint grid.
    fn by_table<R: RngCore + ?Sized>(&self, beta: f64, rng: &mut R) -> f64 {
        let h = beta / TABLE_POINTS as f64;
        let half: Vec<f64> = (0..TABLE_POINTS / 2)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                self.table.ln_density(s) + self.table.ln_density(beta - s)
            })
            .collect();
        let top = half.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = half.iter().map(|l| (l - top).exp()).collect();
        let mirror: Vec<f64> = weights.iter().rev().cloned().collect();
        weights.extend(mirror);
        let total: f64 = weights.iter().sum();
        let target = open01(rng) * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            if acc + w >= target {
                let frac = if *w > 0.0 { (target - acc) / w } else { 0.5 };
                return (i as f64 + frac) * h;
            }
            acc += w;
        }
        0.5 * beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn grid_validation() {
        let mut rng = CounterRng::new(1);
        assert_eq!(
            sample_subordinator(0.5, &[0.0, 1.0, 1.0], &mut rng),
            Err(Error::InvalidGrid)
        );
        assert_eq!(sample_subordinator(0.5, &[0.1, 1.0], &mut rng), Err(Error::InvalidGrid));
        assert!(sample_subordinator(0.5, &[0.0, 1.0], &mut rng).is_ok());
    }

    #[test]
    fn inverse_on_grid() {
        let mut rng = CounterRng::new(2);
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 100.0).collect();
        let path = sample_subordinator(0.5, &grid, &mut rng).unwrap();
        assert!(path.values().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(path.inverse_at(0.0).unwrap(), 0.0);
        let top = *path.values().last().unwrap();
        assert!(matches!(path.inverse_at(top), Err(Error::PathExhausted { .. })));
        let levels: Vec<f64> = (0..1000).map(|i| top * i as f64 / 1000.0).collect();
        let inv: Vec<f64> = levels.iter().map(|&t| path.inverse_at(t).unwrap()).collect();
        assert!(inv.windows(2).all(|w| w[0] <= w[1]));
        // {V^{-1}(t) > u} iff {V(u) < t} at grid points
        for (i, &u) in grid.iter().enumerate() {
            for &t in &levels {
                assert_eq!(path.inverse_at(t).unwrap() > u, path.values()[i] < t);
            }
        }
    }

    #[test]
    fn bridge_halves_stay_inside() {
        let sampler = BisectionSampler::new(0.5).unwrap();
        let mut rng = CounterRng::new(9);
        for beta in [0.05, 0.3, 1.0, 10.0, 1e4] {
            for _ in 0..50 {
                let x = sampler.bridge(beta, &mut rng);
                assert!((0.0..=beta).contains(&x));
            }
        }
    }

    #[test]
    fn bisection_mean_matches_exact_marginal() {
        // E[V^{-1}(1)] = 1/Γ(1+α) = 2/√π at α = 1/2
        let sampler = BisectionSampler::new(0.5).unwrap();
        let mut rng = CounterRng::new(4);
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|_| sampler.sample(1.0, 1e-4, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let target = 2.0 / std::f64::consts::PI.sqrt();
        // sd of V^{-1}(1) at α = 1/2 is sqrt(1 - 2/π) ≈ 0.60
        assert!((mean - target).abs() < 4.0 * 0.61 / (n as f64).sqrt(), "{mean}");
    }
}
