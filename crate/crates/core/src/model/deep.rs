//! Deep traps at a horizon `n`.

use serde::{Deserialize, Serialize};

use super::environment::{Depths, Environment};
use crate::error::{Error, Result};

/// `g(n) = n^{1/α} / (ln n)^{2/(1-α)}`.
pub fn critical_depth(n: u64, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::HorizonTooSmall { n });
    }
    let nf = n as f64;
    Ok(nf.powf(1.0 / alpha) / nf.ln().powf(2.0 / (1.0 - alpha)))
}

/// Exponents of the auxiliary scales `ρ(n) = n^κ` and `ν(n) = ⌊(ln n)^{1+γ}⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleExponents {
    pub kappa: f64,
    pub gamma: f64,
}

impl Default for ScaleExponents {
    fn default() -> Self {
        Self {
            kappa: 0.25,
            gamma: 0.5,
        }
    }
}

impl ScaleExponents {
    pub fn new(kappa: f64, gamma: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0 / 3.0) {
            return Err(Error::ParameterDomain {
                field: "kappa",
                value: kappa,
                domain: "(0, 1/3)",
            });
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::ParameterDomain {
                field: "gamma",
                value: gamma,
                domain: "(0, 1)",
            });
        }
        Ok(Self { kappa, gamma })
    }

    pub fn nu(&self, n: u64) -> u64 {
        (n as f64).ln().powf(1.0 + self.gamma).floor() as u64
    }

    pub fn rho(&self, n: u64) -> f64 {
        (n as f64).powf(self.kappa)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepTrapIndex {
    pub n: u64,
    pub g: f64,
    pub phi: f64,
    pub nu: u64,
    pub rho: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub deltas: Vec<i64>,
    pub theta: u64,
    pub star_deltas: Vec<i64>,
    pub star_theta: u64,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub e_star: bool,
}

impl DeepTrapIndex {
    /// Scans sites `0..=n` of `env`.
    pub fn build(env: &Environment, n: u64, scales: ScaleExponents) -> Result<Self> {
        let g = critical_depth(n, env.alpha())?;
        let deltas = env.sites_at_least(0, n as i64, g);
        let phi = env.survival(g);
        Ok(Self::assemble(env, n, scales, g, phi, deltas))
    }

    /// Like [`DeepTrapIndex::build`] for an arbitrary depth source, whose
    /// law has survival `phi` at `g(n)`.
    pub fn build_with<D: Depths + ?Sized>(
        depths: &D,
        alpha: f64,
        phi: f64,
        n: u64,
        scales: ScaleExponents,
    ) -> Result<Self> {
        let g = critical_depth(n, alpha)?;
        let deltas = (0..=n as i64).filter(|&x| depths.depth(x) >= g).collect();
        Ok(Self::assemble(depths, n, scales, g, phi, deltas))
    }

    fn assemble<D: Depths + ?Sized>(
        depths: &D,
        n: u64,
        scales: ScaleExponents,
        g: f64,
        phi: f64,
        deltas: Vec<i64>,
    ) -> Self {
        let nu = scales.nu(n);
        let rho = scales.rho(n);
        let theta = deltas.len() as u64;

        let mut star_deltas = Vec::new();
        let mut floor = nu as i64;
        for &d in &deltas {
            if d >= floor {
                star_deltas.push(d);
                floor = d + 2 * nu as i64 + 1;
            }
        }
        let star_theta = star_deltas.len() as u64;

        let ln_n = (n as f64).ln();
        let mean = n as f64 * phi;
        let tf = theta as f64;
        let e1 = mean * (1.0 - 1.0 / ln_n) <= tf && tf <= mean * (1.0 + 1.0 / ln_n);
        let e2 = match deltas.first() {
            None => true,
            Some(&first) => first as f64 >= rho && deltas.windows(2).all(|w| (w[1] - w[0]) as f64 >= rho),
        };
        let e3 = (-(nu as i64)..=0).all(|x| depths.depth(x) < g);

        Self {
            n,
            g,
            phi,
            nu,
            rho,
            kappa: scales.kappa,
            gamma: scales.gamma,
            deltas,
            theta,
            star_deltas,
            star_theta,
            e1,
            e2,
            e3,
            e_star: theta == star_theta,
        }
    }

    /// `E(n) = E₁ ∩ E₂ ∩ E₃`.
    pub fn event_e(&self) -> bool {
        self.e1 && self.e2 && self.e3
    }

    /// `δ_j` with the convention `δ_0 = 0`.
    pub fn delta(&self, j: usize) -> i64 {
        if j == 0 {
            0
        } else {
            self.deltas[j - 1]
        }
    }
}
