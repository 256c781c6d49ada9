//! Aging, localization in the last deep trap and renewal laws of the trap clock.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::events::set_interval;
use super::scaling::{site_budget, time_budget};
use super::{AgingScales, ExperimentReport, LabConfig};
use crate::error::{Error, Result};
use crate::model::{pareto_from_uniform, DeepTrapIndex, Depths, Environment, ModelParams, ScaleExponents};
use crate::parallel::run_trials;
use crate::rng::{derive_seed, CounterStream, Purpose};
use crate::stable::{arcsine_cdf, overshoot_cdf, undershoot_cdf};
use crate::stats::{ks_one_sample, wilson_interval, IntervalEstimate};
use crate::walk::Walker;

const LEVEL: f64 = 0.95;

#[derive(Debug, Clone)]
pub struct AgingOutcome {
    pub t: f64,
    pub h: f64,
    pub ci: IntervalEstimate,
    /// `arcsine_cdf(α, 1/h)`.
    pub target: f64,
    pub report: ExperimentReport,
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 16.0) {
        return Err(Error::ParameterDomain {
            field: "t",
            value: t,
            domain: "[16, ∞)",
        });
    }
    Ok(())
}

/// `P(X_{th} = X_t)` for each ratio in `hs`, all from the same walks.
pub fn aging_ladder(cfg: &LabConfig, t: f64, hs: &[f64]) -> Result<Vec<AgingOutcome>> {
    cfg.check_trials()?;
    check_t(t)?;
    if hs.is_empty() {
        return Err(Error::Domain("need at least one ratio h".into()));
    }
    if let Some(&h) = hs.iter().find(|&&h| !(h > 1.0 && h.is_finite())) {
        return Err(Error::ParameterDomain {
            field: "h",
            value: h,
            domain: "(1, ∞)",
        });
    }
    let params = cfg.params;
    let alpha = params.alpha();
    let mut order: Vec<usize> = (0..hs.len()).collect();
    order.sort_by(|&a, &b| hs[a].total_cmp(&hs[b]));
    let times: Vec<f64> = std::iter::once(t).chain(order.iter().map(|&k| t * hs[k])).collect();
    let budget = time_budget(&params, *times.last().unwrap());
    let observed = run_trials(cfg.trials, cfg.exec, |i| {
        let env = cfg.environment(i);
        let mut walker = Walker::new(&env, &params, cfg.noise_seed(i));
        let mut out = vec![0i64; times.len()];
        let mut next = 0;
        while next < times.len() {
            if walker.steps() >= budget {
                return Err(Error::RunawaySimulation { budget });
            }
            let from = walker.position();
            walker.step();
            while next < times.len() && times[next] < walker.clock() {
                out[next] = from;
                next += 1;
            }
        }
        Ok(out)
    });
    let observed: Vec<Vec<i64>> = observed.into_iter().collect::<Result<_>>()?;
    let mut outcomes = Vec::with_capacity(hs.len());
    for (k, &h) in hs.iter().enumerate() {
        let col = 1 + order.iter().position(|&o| o == k).unwrap();
        let mut report = ExperimentReport::new("aging", &["trial", "x_t", "x_th", "same"]);
        let mut hits = 0;
        for (i, obs) in observed.iter().enumerate() {
            let same = obs[0] == obs[col];
            hits += same as u64;
            report.push_row(vec![i as f64, obs[0] as f64, obs[col] as f64, same as u8 as f64]);
        }
        let ci = wilson_interval(hits, cfg.trials, LEVEL)?;
        let target = arcsine_cdf(alpha, 1.0 / h)?;
        report
            .set("alpha", alpha)
            .set("epsilon", params.epsilon())
            .set("t", t)
            .set("h", h)
            .set("seed", cfg.seed)
            .set("trials", cfg.trials)
            .set("target", target)
            .set("abs_error", (ci.estimate - target).abs());
        set_interval(&mut report, "estimate", &ci);
        outcomes.push(AgingOutcome {
            t,
            h,
            ci,
            target,
            report,
        });
    }
    Ok(outcomes)
}

/// `P(X_{th} = X_t)` against `arcsine_cdf(α, 1/h)`.
pub fn aging_estimate(cfg: &LabConfig, t: f64, h: f64) -> Result<AgingOutcome> {
    Ok(aging_ladder(cfg, t, &[h])?.remove(0))
}

/// Hitting times of the deep traps along one walk observed at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapClock {
    /// `H_{δ_j}` for `j = 0, 1, …` with `δ_0 = 0`, through the first deep
    /// trap not reached by time `t` (`∞` if the walk stopped short of it).
    pub hitting_times: Vec<f64>,
    /// `H_{δ_j+ν̄}` for the same indices.
    pub exit_times: Vec<f64>,
    /// `ℓ_t = sup{j : H_{δ_j} ≤ t}`.
    pub ell: u64,
    pub position: i64,
    /// Largest site visited by time `t`.
    pub running_max: i64,
}

/// Runs the walk past time `t` and reads off its trap clock.
pub fn trap_clock<D: Depths>(
    depths: D,
    params: &ModelParams,
    index: &DeepTrapIndex,
    nu_bar: u64,
    t: f64,
    noise_seed: u64,
    budget: u64,
) -> Result<TrapClock> {
    let mut walker = Walker::new(depths, params, noise_seed);
    // first_hit[y] = H_y for every y in 0..=running max
    let mut first_hit = vec![0.0f64];
    let mut position = 0;
    while walker.clock() <= t {
        if walker.steps() >= budget {
            return Err(Error::RunawaySimulation { budget });
        }
        let s = walker.step();
        position = s.from;
        if s.to as usize == first_hit.len() {
            first_hit.push(walker.clock());
        }
    }
    let running_max = first_hit.iter().rposition(|&h| h <= t).unwrap() as i64;
    let hit = |x: i64| first_hit.get(x as usize).copied().unwrap_or(f64::INFINITY);
    let mut hitting_times = vec![0.0];
    let mut exit_times = vec![hit(nu_bar as i64)];
    for &d in &index.deltas {
        let h = hit(d);
        hitting_times.push(h);
        exit_times.push(hit(d + nu_bar as i64));
        if h > t {
            break;
        }
    }
    let ell = hitting_times.iter().filter(|&&h| h <= t).count() as u64 - 1;
    Ok(TrapClock {
        hitting_times,
        exit_times,
        ell,
        position,
        running_max,
    })
}

#[derive(Debug, Clone)]
pub struct LocalizationOutcome {
    pub scales: AgingScales,
    /// `P(X_t = δ_{ℓ_t})`.
    pub localized: IntervalEstimate,
    /// `P(H_{δ_{ℓ_t}} ≤ t < H_{δ_{ℓ_t}+ν̄})`.
    pub straddle: IntervalEstimate,
    /// Localized trials outside the straddle window.
    pub flagged: IntervalEstimate,
    pub c_event: IntervalEstimate,
    pub d_event: IntervalEstimate,
    pub report: ExperimentReport,
}

/// Frequency with which the walk sits in the last deep trap it reached.
pub fn localization_estimate(
    cfg: &LabConfig,
    t: f64,
    c_prime: Option<f64>,
    beta_exp: Option<f64>,
) -> Result<LocalizationOutcome> {
    cfg.check_trials()?;
    let params = cfg.params;
    let sc = AgingScales::new(&params, &cfg.scales, t, c_prime, beta_exp)?;
    let budget = time_budget(&params, t);
    let d_cut = (sc.n_t as f64).ln().powf(sc.beta_exp);
    let rows = run_trials(cfg.trials, cfg.exec, |i| {
        let env = cfg.environment(i);
        let idx = DeepTrapIndex::build(&env, sc.n_t, cfg.scales)?;
        let clock = trap_clock(&env, &params, &idx, sc.nu_bar, t, cfg.noise_seed(i), budget)?;
        let ell = clock.ell as usize;
        let delta = idx.delta(ell);
        let entered = clock.hitting_times[ell];
        let exit = clock.exit_times[ell];
        debug_assert!(entered <= t);
        debug_assert!(clock.hitting_times.get(ell + 1).is_none_or(|&h| h > t));
        let localized = clock.position == delta;
        let straddle = entered <= t && t < exit;
        let nu = idx.nu as i64;
        let d_ok = idx
            .deltas
            .iter()
            .all(|&d| (d - nu..=d + nu).filter(|&x| x != d).all(|x| env.depth(x) < d_cut));
        Ok([
            clock.ell as f64,
            clock.position as f64,
            delta as f64,
            localized as u8 as f64,
            straddle as u8 as f64,
            (localized && !straddle) as u8 as f64,
            (clock.running_max <= sc.n_t as i64) as u8 as f64,
            d_ok as u8 as f64,
        ])
    });
    let columns = [
        "trial",
        "ell",
        "x_t",
        "delta_ell",
        "localized",
        "straddle",
        "flagged",
        "c_event",
        "d_event",
    ];
    let mut report = ExperimentReport::new("localization", &columns);
    let mut counts = [0u64; 5];
    for (k, r) in rows.into_iter().enumerate() {
        let r: [f64; 8] = r?;
        for (c, v) in counts.iter_mut().zip(&r[3..8]) {
            *c += (*v == 1.0) as u64;
        }
        let mut row = vec![k as f64];
        row.extend_from_slice(&r);
        report.push_row(row);
    }
    let ci = |k: usize| wilson_interval(counts[k], cfg.trials, LEVEL);
    let (localized, straddle, flagged, c_event, d_event) = (ci(0)?, ci(1)?, ci(2)?, ci(3)?, ci(4)?);
    report
        .set("alpha", params.alpha())
        .set("epsilon", params.epsilon())
        .set("t", t)
        .set("n_t", sc.n_t)
        .set("nu_bar", sc.nu_bar)
        .set("c_prime", sc.c_prime)
        .set("beta_exp", sc.beta_exp)
        .set("seed", cfg.seed)
        .set("trials", cfg.trials);
    set_interval(&mut report, "estimate", &localized);
    set_interval(&mut report, "straddle", &straddle);
    set_interval(&mut report, "flagged", &flagged);
    set_interval(&mut report, "p_c", &c_event);
    set_interval(&mut report, "p_d", &d_event);
    Ok(LocalizationOutcome {
        scales: sc,
        localized,
        straddle,
        flagged,
        c_event,
        d_event,
        report,
    })
}

/// `t^α φ(n_t) / (c Γ(1+α))`, the leading-order mean number of renewals by
/// time `t`, with `c = (απ / sin απ) v^{-α}`.
pub fn expected_renewals(params: &ModelParams, scales: &ScaleExponents, t: f64) -> Result<f64> {
    let sc = AgingScales::new(params, scales, t, None, None)?;
    let a = params.alpha();
    Ok(t.powf(a) * sc.phi / (params.laplace_constant() * gamma(1.0 + a)))
}

/// Smallest power-of-ten multiple of 16 with at least `count` expected renewals.
pub fn renewal_horizon(params: &ModelParams, scales: &ScaleExponents, count: f64) -> Result<f64> {
    let mut t = 16.0;
    while expected_renewals(params, scales, t)? < count {
        t *= 10.0;
        if t > 1e300 {
            return Err(Error::Domain(format!("no horizon reaches {count} renewals")));
        }
    }
    Ok(t)
}

/// Depths around a fresh deep trap at 0: the trap itself is Pareto conditioned
/// on `τ ≥ g`, sites to its left are conditioned on `τ < g` and sites to its
/// right are unconditioned.
struct TrapWindow {
    stream: CounterStream,
    base: u64,
    nu: i64,
    alpha: f64,
    g: f64,
    shallow_floor: f64,
}

impl Depths for TrapWindow {
    fn depth(&self, x: i64) -> f64 {
        let u = self.stream.uniform_open_closed(self.base + (x + self.nu) as u64);
        if x == 0 {
            self.g * pareto_from_uniform(u, self.alpha)
        } else if x < 0 {
            let v = self.shallow_floor + (1.0 - self.shallow_floor) * u;
            pareto_from_uniform(v, self.alpha)
        } else {
            pareto_from_uniform(u, self.alpha)
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynkinOutcome {
    pub scales: AgingScales,
    pub undershoot: Vec<f64>,
    pub overshoot: Vec<f64>,
    pub renewals: Vec<u64>,
    pub ks_undershoot: f64,
    pub ks_overshoot: f64,
    pub expected_renewals: f64,
    pub report: ExperimentReport,
}

const MAX_WINDOWS: u64 = 1 << 22;

/// Renewal sums of i.i.d. passage times `T*` from a deep trap to `ν̄` past it,
/// each through a fresh window and reflected `ν` sites to the left.
/// Compares `(t - S_ℓ)/t` and `(S_{ℓ+1} - t)/t` with their limit laws.
pub fn dynkin_renewal_check(cfg: &LabConfig, t: f64, c_prime: Option<f64>) -> Result<DynkinOutcome> {
    cfg.check_trials()?;
    let params = cfg.params;
    let alpha = params.alpha();
    let sc = AgingScales::new(&params, &cfg.scales, t, c_prime, None)?;
    let nu = sc.nu as i64;
    let nb = sc.nu_bar as i64;
    let stride = (nu + nb + 1) as u64;
    let step_budget = 1000 * site_budget(&params, nu + nb);
    let results = run_trials(cfg.trials, cfg.exec, |i| {
        let stream = CounterStream::new(cfg.stream_seed(Purpose::Conditioning, i));
        let noise = cfg.noise_seed(i);
        let mut sum = 0.0;
        let mut j = 0u64;
        loop {
            if j >= MAX_WINDOWS {
                return Err(Error::RunawaySimulation { budget: MAX_WINDOWS });
            }
            let window = TrapWindow {
                stream,
                base: j * stride,
                nu,
                alpha,
                g: sc.g,
                shallow_floor: sc.phi,
            };
            let mut walker =
                Walker::local(window, &params, derive_seed(noise, Purpose::Noise, j), 0).with_walls(-nu, nb);
            if !walker.run_to(nb, step_budget) {
                return Err(Error::RunawaySimulation { budget: step_budget });
            }
            let next = sum + walker.clock();
            if next > t {
                return Ok(((t - sum) / t, (next - t) / t, j));
            }
            sum = next;
            j += 1;
        }
    });
    let mut undershoot = Vec::with_capacity(results.len());
    let mut overshoot = Vec::with_capacity(results.len());
    let mut renewals = Vec::with_capacity(results.len());
    let mut report = ExperimentReport::new("dynkin", &["trial", "renewals", "undershoot", "overshoot"]);
    for (k, r) in results.into_iter().enumerate() {
        let (u, o, j) = r?;
        report.push_row(vec![k as f64, j as f64, u, o]);
        undershoot.push(u);
        overshoot.push(o);
        renewals.push(j);
    }
    let ks_undershoot = ks_one_sample(&undershoot, |x| undershoot_cdf(alpha, x.clamp(0.0, 1.0)).unwrap())?;
    let ks_overshoot = ks_one_sample(&overshoot, |x| overshoot_cdf(alpha, 0.0, x.max(0.0)).unwrap())?;
    let expected = expected_renewals(&params, &cfg.scales, t)?;
    let frac = |v: &[f64], f: &dyn Fn(f64) -> bool| v.iter().filter(|&&x| f(x)).count() as f64 / v.len() as f64;
    report
        .set("alpha", alpha)
        .set("epsilon", params.epsilon())
        .set("t", t)
        .set("n_t", sc.n_t)
        .set("nu", sc.nu)
        .set("nu_bar", sc.nu_bar)
        .set("c_prime", sc.c_prime)
        .set("seed", cfg.seed)
        .set("trials", cfg.trials)
        .set("expected_renewals", expected)
        .set(
            "mean_renewals",
            renewals.iter().sum::<u64>() as f64 / renewals.len() as f64,
        )
        .set("ks_undershoot", ks_undershoot)
        .set("ks_overshoot", ks_overshoot)
        .set("p_undershoot_le_half", frac(&undershoot, &|x| x <= 0.5))
        .set("target_undershoot_le_half", undershoot_cdf(alpha, 0.5)?)
        .set("p_overshoot_ge_one", frac(&overshoot, &|x| x >= 1.0))
        .set("target_overshoot_ge_one", overshoot_cdf(alpha, 1.0, f64::INFINITY)?);
    Ok(DynkinOutcome {
        scales: sc,
        undershoot,
        overshoot,
        renewals,
        ks_undershoot,
        ks_overshoot,
        expected_renewals: expected,
        report,
    })
}

/// An environment with a single trap of the given depth at `site` and
/// depth 1 elsewhere.
pub fn single_trap_environment(alpha: f64, site: i64, depth: f64) -> Result<Environment> {
    Ok(Environment::new(alpha, 0, crate::model::DepthLaw::Constant { depth: 1.0 })?.with_pin(site, depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::EnvFamily;

    fn cfg(trials: u64) -> LabConfig {
        LabConfig::new(ModelParams::new(0.5, 0.25).unwrap(), 21, trials)
    }

    #[test]
    fn aging_targets_and_bounds() {
        let out = aging_ladder(&cfg(200), 1e4, &[4.0, 2.0]).unwrap();
        assert!((out[0].target - 1.0 / 3.0).abs() < 1e-12);
        assert!((out[1].target - 0.5).abs() < 1e-12);
        for o in &out {
            assert!((0.0..=1.0).contains(&o.ci.estimate));
        }
        // staying put for the longer window implies staying put for the shorter
        assert!(out[0].ci.estimate <= out[1].ci.estimate);
        assert!(aging_estimate(&cfg(5), 1e4, 1.0).is_err());
        assert!(aging_estimate(&cfg(5), 10.0, 2.0).is_err());
    }

    #[test]
    fn single_deep_trap_localizes() {
        let env = single_trap_environment(0.5, 1, 1e6).unwrap();
        let c = cfg(200).with_family(EnvFamily::Fixed(env));
        let out = localization_estimate(&c, 1e3, None, None).unwrap();
        assert!(out.localized.estimate >= 0.97, "{}", out.localized.estimate);
    }

    #[test]
    fn trap_clock_brackets() {
        let params = ModelParams::new(0.5, 0.25).unwrap();
        let scales = ScaleExponents::default();
        for seed in 0..30 {
            let env = Environment::pareto(0.5, seed).unwrap();
            let t = 1e6;
            let sc = AgingScales::new(&params, &scales, t, None, None).unwrap();
            let idx = DeepTrapIndex::build(&env, sc.n_t, scales).unwrap();
            let c = trap_clock(&env, &params, &idx, sc.nu_bar, t, seed, 1 << 30).unwrap();
            assert!(c.hitting_times.windows(2).all(|w| w[0] < w[1]));
            let ell = c.ell as usize;
            assert!(c.hitting_times[ell] <= t);
            if let Some(&h) = c.hitting_times.get(ell + 1) {
                assert!(h > t);
            }
        }
    }

    #[test]
    fn undershoot_in_unit_interval() {
        let params = ModelParams::new(0.5, 0.25).unwrap();
        let t = 1e8;
        let out = dynkin_renewal_check(&cfg(200), t, None).unwrap();
        assert!(out.undershoot.iter().all(|&u| (0.0..=1.0).contains(&u)));
        assert!(out.overshoot.iter().all(|&o| o > 0.0));
        assert!(expected_renewals(&params, &ScaleExponents::default(), t).unwrap() > 0.0);
    }

    #[test]
    fn horizon_for_fifty_renewals() {
        let params = ModelParams::new(0.5, 0.25).unwrap();
        let s = ScaleExponents::default();
        let t = renewal_horizon(&params, &s, 50.0).unwrap();
        assert!(expected_renewals(&params, &s, t).unwrap() >= 50.0);
        assert!(expected_renewals(&params, &s, t / 10.0).unwrap() < 50.0);
    }
}
