//! Generalized arcsine laws.
//!
//! `arcsine_cdf(α, x) = I_x(α, 1-α)` has density
//! `sin(απ)/π · y^{α-1} (1-y)^{-α}` on `(0, 1)`. The overshoot law has density
//! `sin(απ)/π · x^{-α} / (1+x)` on `(0, ∞)`.

use std::f64::consts::PI;

use statrs::function::beta::checked_beta_reg;

use crate::error::{Error, Result};

const QUAD_TOL: f64 = 1e-14;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            field: "alpha",
            value: alpha,
            domain: "(0, 1)",
        })
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must lie in [0, 1], got {x}")))
    }
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::integrate(f, a, b, QUAD_TOL).integral
}

/// Regularized incomplete beta by continued fraction.
fn beta_reg(a: f64, b: f64, x: f64) -> Option<f64> {
    checked_beta_reg(a, b, x).ok().filter(|v| v.is_finite())
}

/// `P(Y ≤ x)` for `Y ~ Beta(α, 1-α)`. Continued fraction first, quadrature if
/// the series fails to produce a finite value.
pub fn arcsine_cdf(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_unit(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    match beta_reg(alpha, 1.0 - alpha, x) {
        Some(v) => Ok(v.clamp(0.0, 1.0)),
        None => arcsine_cdf_quadrature(alpha, x),
    }
}

/// [`arcsine_cdf`] by quadrature alone.
///
/// Below 1/2 the substitution `y = s^{1/α}` removes the singularity at 0;
/// above it, `1 - y = w^{1/(1-α)}` removes the one at 1.
pub fn arcsine_cdf_quadrature(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_unit(x)?;
    let norm = (alpha * PI).sin() / PI;
    let beta = 1.0 - alpha;
    let lower_end = x.min(0.5);
    let lower = integrate(
        |s| (1.0 - s.powf(1.0 / alpha)).powf(-alpha) / alpha,
        0.0,
        lower_end.powf(alpha),
    );
    let upper = if x > 0.5 {
        integrate(
            |w| (1.0 - w.powf(1.0 / beta)).powf(alpha - 1.0) / beta,
            (1.0 - x).powf(beta),
            0.5f64.powf(beta),
        )
    } else {
        0.0
    };
    Ok((norm * (lower + upper)).clamp(0.0, 1.0))
}

/// `P(Z ≤ x)` for the overshoot law, `I_{x/(1+x)}(1-α, α)`.
fn overshoot_below_series(alpha: f64, x: f64) -> Option<f64> {
    if x.is_infinite() {
        return Some(1.0);
    }
    beta_reg(1.0 - alpha, alpha, x / (1.0 + x))
}

/// `(sin απ / π) ∫_0^x dy / (y^α (1+y))` by quadrature. On `(0, 1]` the
/// substitution `y = s^{1/(1-α)}` is used; beyond 1, `y → 1/y` followed by
/// `y = s^{1/α}` maps the tail onto `(0, 1)`.
fn overshoot_below_quadrature(alpha: f64, x: f64) -> f64 {
    let norm = (alpha * PI).sin() / PI;
    let beta = 1.0 - alpha;
    let head = integrate(
        |s| 1.0 / (beta * (1.0 + s.powf(1.0 / beta))),
        0.0,
        x.min(1.0).powf(beta),
    );
    // ∫_1^x = ∫_{1/x}^1 y^{α-1}/(1+y) dy = (1/α) ∫_{x^{-α}}^1 ds / (1 + s^{1/α})
    let tail = if x > 1.0 {
        let lo = if x.is_infinite() { 0.0 } else { x.powf(-alpha) };
        integrate(|s| 1.0 / (alpha * (1.0 + s.powf(1.0 / alpha))), lo, 1.0)
    } else {
        0.0
    };
    norm * (head + tail)
}

/// `(sin απ / π) ∫_{x1}^{x2} dx / (x^α (1+x))`, with `x2 = ∞` allowed.
pub fn overshoot_cdf(alpha: f64, x1: f64, x2: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(x1 >= 0.0 && x2 >= x1) {
        return Err(Error::Domain(format!("need 0 <= x1 <= x2, got x1 = {x1}, x2 = {x2}")));
    }
    if x1 == x2 {
        return Ok(0.0);
    }
    let g = |x: f64| overshoot_below_quadrature(alpha, x);
    Ok((g(x2) - g(x1)).clamp(0.0, 1.0))
}

/// [`overshoot_cdf`] through the incomplete beta function.
pub fn overshoot_cdf_series(alpha: f64, x1: f64, x2: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(x1 >= 0.0 && x2 >= x1) {
        return Err(Error::Domain(format!("need 0 <= x1 <= x2, got x1 = {x1}, x2 = {x2}")));
    }
    let g = |x: f64| {
        if x == 0.0 {
            Ok(0.0)
        } else {
            overshoot_below_series(alpha, x).ok_or_else(|| Error::Domain(format!("incomplete beta failed at {x}")))
        }
    };
    Ok((g(x2)? - g(x1)?).clamp(0.0, 1.0))
}

/// Law of the undershoot fraction `(t - S_ℓ)/t` of a renewal sequence in the
/// stable domain, `Beta(1-α, α)`: `P(U ≤ x) = 1 - arcsine_cdf(α, 1-x)`.
pub fn undershoot_cdf(alpha: f64, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(1.0 - arcsine_cdf(alpha, 1.0 - x)?)
}
