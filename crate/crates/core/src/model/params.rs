use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail exponent, drift and the constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    alpha: f64,
    epsilon: f64,
    p: f64,
    q: f64,
    r: f64,
    v: f64,
    v_sharp: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ParameterDomain {
                field: "alpha",
                value: alpha,
                domain: "(0, 1)",
            });
        }
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(Error::ParameterDomain {
                field: "epsilon",
                value: epsilon,
                domain: "(0, 1/2]",
            });
        }
        let p = 0.5 + epsilon;
        let q = 0.5 - epsilon;
        let v = 2.0 * epsilon;
        Ok(Self {
            alpha,
            epsilon,
            p,
            q,
            r: q / p,
            v,
            v_sharp: (alpha * PI).sin() / (alpha * PI) * v.powf(alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    /// Probability of a step to the right.
    pub fn p(&self) -> f64 {
        self.p
    }
    /// Probability of a step to the left.
    pub fn q(&self) -> f64 {
        self.q
    }
    /// `q / p`, in `[0, 1)`.
    pub fn r(&self) -> f64 {
        self.r
    }
    /// Speed of the embedded walk.
    pub fn v(&self) -> f64 {
        self.v
    }
    /// Scale of the limiting inverse subordinator, `sin(απ)/(απ) · v^α`.
    pub fn v_sharp(&self) -> f64 {
        self.v_sharp
    }

    /// `απ / sin(απ) · v^{-α}`, the Laplace exponent of the rescaled
    /// hitting-time process per unit of distance.
    pub fn laplace_constant(&self) -> f64 {
        let a = self.alpha;
        a * PI / (a * PI).sin() * self.v.powf(-a)
    }

    pub fn is_fully_directed(&self) -> bool {
        self.q == 0.0
    }
}
