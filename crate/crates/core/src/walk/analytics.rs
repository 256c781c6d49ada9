//! Closed forms for the embedded walk and the reflected chain.

use crate::error::{Error, Result};
use crate::model::{Depths, ModelParams};

/// Probability that the walk started at `x + 1` hits `x` before `n`.
pub fn psi(params: &ModelParams, x: i64, n: i64) -> Result<f64> {
    if x >= n {
        return Err(Error::Domain(format!("need x < n, got x = {x}, n = {n}")));
    }
    let r = params.r();
    if r == 0.0 {
        return Ok(0.0);
    }
    let d = (n - x) as i32;
    Ok(r * (1.0 - r.powi(d - 1)) / (1.0 - r.powi(d)))
}

/// Expected number of visits to `x`, the current one included, before
/// hitting `n`: `1 / (p (1 - ψ(x, n)))`.
pub fn expected_visits(params: &ModelParams, x: i64, n: i64) -> Result<f64> {
    let s = psi(params, x, n)?;
    Ok(1.0 / (params.p() * (1.0 - s)))
}

/// Per-visit return probability `q + p ψ(x, n)`; the visit count is
/// geometric on `{1, 2, …}` with this failure probability.
pub fn return_probability(params: &ModelParams, x: i64, n: i64) -> Result<f64> {
    Ok(params.q() + params.p() * psi(params, x, n)?)
}

/// `μ(x) = r^{δ-x} τ_x / τ_δ`.
pub fn reversible_measure<D: Depths + ?Sized>(depths: &D, params: &ModelParams, delta: i64, x: i64) -> f64 {
    params.r().powi((delta - x) as i32) * depths.depth(x) / depths.depth(delta)
}

/// Largest relative violation of `μ(x) c(x,x+1) = μ(x+1) c(x+1,x)` over the
/// bonds of `[δ-ν, δ+ν̄]`.
pub fn check_detailed_balance<D: Depths + ?Sized>(
    depths: &D,
    params: &ModelParams,
    delta: i64,
    nu: u64,
    nu_bar: u64,
) -> Result<f64> {
    if params.r() == 0.0 {
        return Err(Error::Domain("the reflected chain needs epsilon < 1/2".into()));
    }
    let (lo, hi) = (delta - nu as i64, delta + nu_bar as i64);
    let mut worst: f64 = 0.0;
    for x in lo..hi {
        let flow_up = reversible_measure(depths, params, delta, x) * params.p() / depths.depth(x);
        let flow_down = reversible_measure(depths, params, delta, x + 1) * params.q() / depths.depth(x + 1);
        let scale = flow_up.abs().max(flow_down.abs());
        if scale > 0.0 {
            worst = worst.max((flow_up - flow_down).abs() / scale);
        }
    }
    Ok(worst)
}

/// Normalised stationary law of the chain reflected at `lo` and `hi`.
///
/// At the walls the jump chain leaves with probability one, which
/// reweights `μ` by `p` at `lo` and by `q` at `hi`.
pub fn reflected_stationary<D: Depths + ?Sized>(
    depths: &D,
    params: &ModelParams,
    delta: i64,
    lo: i64,
    hi: i64,
) -> Result<Vec<f64>> {
    if params.r() == 0.0 {
        return Err(Error::Domain("the reflected chain needs epsilon < 1/2".into()));
    }
    if !(lo < hi && (lo..=hi).contains(&delta)) {
        return Err(Error::Domain(format!("bad window [{lo}, {hi}] around {delta}")));
    }
    let mut w: Vec<f64> = (lo..=hi)
        .map(|x| reversible_measure(depths, params, delta, x))
        .collect();
    w[0] *= params.p();
    *w.last_mut().unwrap() *= params.q();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WindowDepths;
    use crate::walk::Walker;
    use nalgebra::{DMatrix, DVector};

    /// First-step analysis: h(y) = P_y(hit x before n), solved on x+1..n-1.
    fn psi_by_linear_solve(p: f64, x: i64, n: i64) -> f64 {
        let m = (n - x - 1) as usize;
        if m == 0 {
            return 0.0;
        }
        let q = 1.0 - p;
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for i in 0..m {
            a[(i, i)] = 1.0;
            if i > 0 {
                a[(i, i - 1)] = -q;
            } else {
                b[i] = q;
            }
            if i + 1 < m {
                a[(i, i + 1)] = -p;
            }
        }
        a.lu().solve(&b).unwrap()[0]
    }

    #[test]
    fn psi_examples() {
        let m = ModelParams::new(0.5, 0.25).unwrap();
        assert!((psi(&m, 0, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((psi(&m, 0, 50).unwrap() - 1.0 / 3.0).abs() < 1e-20);
        let d = ModelParams::new(0.5, 0.5).unwrap();
        assert_eq!(psi(&d, 0, 7).unwrap(), 0.0);
        assert_eq!(expected_visits(&d, 0, 7).unwrap(), 1.0);
        assert!(psi(&m, 3, 3).is_err());
    }

    #[test]
    fn psi_matches_linear_solve() {
        for eps in [0.1, 0.25, 0.4] {
            let m = ModelParams::new(0.5, eps).unwrap();
            for x in -3..3 {
                for d in 1..=8 {
                    let exact = psi(&m, x, x + d).unwrap();
                    let solved = psi_by_linear_solve(m.p(), x, x + d);
                    assert!((exact - solved).abs() < 1e-12, "eps={eps} d={d}");
                }
            }
        }
    }

    #[test]
    fn expected_visits_examples() {
        let m = ModelParams::new(0.5, 0.25).unwrap();
        assert!((expected_visits(&m, 0, 2).unwrap() - 16.0 / 9.0).abs() < 1e-14);
        assert!((expected_visits(&m, 0, 200).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detailed_balance_identity() {
        let m = ModelParams::new(0.5, 0.25).unwrap();
        let env = crate::model::Environment::pareto(0.5, 4).unwrap();
        for delta in [0i64, 17, 500] {
            assert!(check_detailed_balance(&env, &m, delta, 30, 10).unwrap() <= 1e-12);
            assert_eq!(reversible_measure(&env, &m, delta, delta), 1.0);
        }
    }

    #[test]
    fn reflected_chain_is_ergodic_for_mu() {
        let m = ModelParams::new(0.5, 0.1).unwrap();
        let depths = WindowDepths {
            offset: -3,
            values: vec![1.5, 3.0, 1.0, 8.0, 2.0, 1.2, 4.0],
            outside: 1.0,
        };
        let target = reflected_stationary(&depths, &m, 0, -3, 3).unwrap();
        let mut w = Walker::new(&depths, &m, 12).with_walls(-3, 3);
        let mut time = [0.0; 7];
        for _ in 0..10_000_000u64 {
            let s = w.step();
            time[(s.from + 3) as usize] += s.hold;
        }
        let total: f64 = time.iter().sum();
        for (t, pi) in time.iter().zip(&target) {
            let frac = t / total;
            assert!((frac / pi - 1.0).abs() < 0.02, "{frac} vs {pi}");
        }
    }
}
