//! One-sided stable laws with Laplace transform `exp(-λ^α)`.

use std::f64::consts::PI;

use rand::distr::Distribution;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform on `(0, 1)`, never an endpoint.
#[inline]
pub(crate) fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * TWO_POW_MINUS_53
}

/// Kanter's function `a(u) = [sin(αu)^α sin((1-α)u)^{1-α} / sin u]^{1/(1-α)}`.
#[inline]
pub fn kanter_a(alpha: f64, u: f64) -> f64 {
    let num = (alpha * u).sin().powf(alpha) * ((1.0 - alpha) * u).sin().powf(1.0 - alpha);
    (num / u.sin()).powf(1.0 / (1.0 - alpha))
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.05..=0.95).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            field: "alpha",
            value: alpha,
            domain: "[0.05, 0.95] for stable sampling",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveStable {
    alpha: f64,
}

impl PositiveStable {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(a(U)/E)^{(1-α)/α}` for the given uniform on `(0,1)` and unit exponential.
    #[inline]
    pub fn from_parts(&self, u: f64, e: f64) -> f64 {
        let a = kanter_a(self.alpha, PI * u);
        (a / e).powf((1.0 - self.alpha) / self.alpha)
    }

    fn gamma(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    /// `P(S ≤ x) = (1/π) ∫_0^π exp(-a(u) x^{-γ}) du`, `γ = α/(1-α)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x.is_infinite() {
            return 1.0;
        }
        let z = x.powf(-self.gamma());
        let alpha = self.alpha;
        let integrand = |u: f64| {
            let az = kanter_a(alpha, u) * z;
            if az > 700.0 || !az.is_finite() {
                0.0
            } else {
                (-az).exp()
            }
        };
        let out = quadrature::integrate(integrand, 0.0, PI, 1e-14);
        (out.integral / PI).clamp(0.0, 1.0)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// `ln f(x)` with `f(x) = γ/(πx) ∫_0^π a z e^{-a z} du`, `z = x^{-γ}`,
    /// evaluated with the integrand's peak factored out.
    pub fn ln_density(&self, x: f64) -> f64 {
        if !(x > 0.0) || x.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let alpha = self.alpha;
        let g = self.gamma();
        let ln_z = -g * x.ln();
        // a(u) increases on (0, π), so a·z·e^{-a z} peaks at a z = 1 or at u = 0.
        let a0 = kanter_a(alpha, 1e-12);
        let ln_a0z = a0.ln() + ln_z;
        let peak = if ln_a0z > 0.0 { ln_a0z - ln_a0z.exp() } else { -1.0 };
        let integrand = |u: f64| {
            let ln_az = kanter_a(alpha, u).ln() + ln_z;
            let v = ln_az - ln_az.exp() - peak;
            if v < -745.0 || v.is_nan() {
                0.0
            } else {
                v.exp()
            }
        };
        let out = quadrature::integrate(integrand, 0.0, PI, 1e-14);
        if out.integral <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (g / PI).ln() - x.ln() + peak + out.integral.ln()
    }
}

/// `ln f` tabulated against `ln x` with cubic interpolation, falling back to
/// quadrature outside the tabulated range.
#[derive(Debug, Clone)]
pub struct LnDensityTable {
    law: PositiveStable,
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl LnDensityTable {
    const LN_LO: f64 = -9.0;
    const LN_HI: f64 = 21.0;
    const POINTS: usize = 4001;

    pub fn new(law: PositiveStable) -> Self {
        let step = (Self::LN_HI - Self::LN_LO) / (Self::POINTS - 1) as f64;
        let values = (0..Self::POINTS)
            .map(|i| law.ln_density((Self::LN_LO + i as f64 * step).exp()))
            .collect();
        Self {
            law,
            lo: Self::LN_LO,
            step,
            values,
        }
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        let pos = (x.ln() - self.lo) / self.step;
        let i = pos.floor();
        if i < 1.0 || i as usize + 2 >= self.values.len() {
            return self.law.ln_density(x);
        }
        let k = i as usize;
        let t = pos - i;
        let (p0, p1, p2, p3) = (
            self.values[k - 1],
            self.values[k],
            self.values[k + 1],
            self.values[k + 2],
        );
        // Catmull-Rom
        p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

impl Distribution<f64> for PositiveStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open01(rng);
        let e = -open01(rng).ln();
        self.from_parts(u, e)
    }
}

pub fn sample_positive_stable<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    let d = PositiveStable::new(alpha)?;
    let u = open01(rng);
    let e = -open01(rng).ln();
    Ok(d.from_parts(u, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn levy_density(x: f64) -> f64 {
        x.powf(-1.5) * (-0.25 / x).exp() / (2.0 * PI.sqrt())
    }

    fn levy_cdf(x: f64) -> f64 {
        statrs::function::erf::erfc(1.0 / (2.0 * x.sqrt()))
    }

    #[test]
    fn half_stable_density_and_cdf_match_levy() {
        let d = PositiveStable::new(0.5).unwrap();
        for x in [0.01, 0.05, 0.2, 1.0, 3.0, 50.0, 1e4] {
            let f = d.density(x);
            assert!((f / levy_density(x) - 1.0).abs() < 1e-9, "x={x}: {f}");
            assert!((d.cdf(x) - levy_cdf(x)).abs() < 1e-10, "x={x}");
        }
        let lf = d.ln_density(1e-4);
        let want = -1.5 * 1e-4f64.ln() - 0.25 / 1e-4 - (2.0 * PI.sqrt()).ln();
        assert!((lf / want - 1.0).abs() < 1e-10, "{lf} vs {want}");
        assert!(d.ln_density(1e-7).is_finite());
    }

    #[test]
    fn samples_positive_and_laplace_at_one() {
        let d = PositiveStable::new(0.5).unwrap();
        let mut rng = CounterRng::new(5);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let s: f64 = d.sample(&mut rng);
            assert!(s > 0.0);
            let v = (-s).exp();
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - (-1f64).exp()).abs() < 4.0 * se);
    }

    #[test]
    fn alpha_guard() {
        assert!(PositiveStable::new(0.04).is_err());
        assert!(PositiveStable::new(0.96).is_err());
        assert!(PositiveStable::new(0.05).is_ok());
    }

    #[test]
    fn table_tracks_direct_density() {
        for alpha in [0.3, 0.5, 0.8] {
            let law = PositiveStable::new(alpha).unwrap();
            let table = LnDensityTable::new(law);
            for i in 0..300 {
                let x = (-8.5 + i as f64 * 0.097).exp();
                let d = law.ln_density(x);
                assert!(
                    (table.ln_density(x) - d).abs() < 1e-6 * d.abs().max(1.0),
                    "alpha={alpha} x={x}"
                );
            }
        }
    }

    #[test]
    fn density_integrates_to_cdf() {
        for alpha in [0.3, 0.7] {
            let d = PositiveStable::new(alpha).unwrap();
            let out = quadrature::integrate(|x| d.density(x), 1e-6, 2.0, 1e-11);
            let want = d.cdf(2.0) - d.cdf(1e-6);
            assert!((out.integral - want).abs() < 1e-7, "alpha={alpha}");
        }
    }
}
