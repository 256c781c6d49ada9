//! Rescaled paths, the running-max gap and hitting-time Laplace transforms.

use super::{ExperimentReport, LabConfig};
use crate::error::{Error, Result};
use crate::model::{Depths, Environment, ModelParams};
use crate::parallel::run_trials;
use crate::rng::{CounterRng, Purpose};
use crate::stable::sample_inverse_marginal;
use crate::stats::{ks_two_sample, RunningMoments};
use crate::walk::{Trajectory, Walker};

/// Default step budget for a walk observed up to clock time `t`.
pub(crate) fn time_budget(params: &ModelParams, t: f64) -> u64 {
    let guess = 100.0 * t.max(1.0).powf(params.alpha()) * (t + std::f64::consts::E).ln() / params.v();
    (guess.ceil() as u64).max(10_000_000)
}

/// Default step budget for a walk run to site `target`.
pub(crate) fn site_budget(params: &ModelParams, target: i64) -> u64 {
    (100.0 * target.max(1) as f64 / params.v()).ceil() as u64
}

/// Positions `X_t` at the sorted times `times`, with the largest backtrack
/// seen before the last of them.
struct Observation {
    positions: Vec<i64>,
    backtrack: i64,
}

fn observe<D: Depths>(walker: &mut Walker<D>, times: &[f64], budget: u64) -> Result<Observation> {
    let mut positions = Vec::with_capacity(times.len());
    let mut run_max = walker.position();
    let mut backtrack = 0i64;
    let mut next = 0;
    while next < times.len() {
        if walker.steps() >= budget {
            return Err(Error::PartialResult {
                covered: walker.clock(),
                requested: times[times.len() - 1],
                prefix: positions.iter().map(|&p| p as f64).collect(),
            });
        }
        let from = walker.position();
        run_max = run_max.max(from);
        backtrack = backtrack.max(run_max - from);
        walker.step();
        let clock = walker.clock();
        while next < times.len() && times[next] < clock {
            positions.push(from);
            next += 1;
        }
    }
    Ok(Observation { positions, backtrack })
}

fn check_times(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.iter().any(|&t| !(0.0..=horizon).contains(&t)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain(format!(
            "grid must be nondecreasing inside [0, {horizon}]"
        )));
    }
    Ok(())
}

/// `X^{(N)}_t = X_{tN} / N^α` at each grid time.
///
/// On budget overrun the error carries the rescaled positions already known.
pub fn scaled_path(
    env: &Environment,
    params: &ModelParams,
    n_scale: f64,
    horizon: f64,
    grid: &[f64],
    noise_seed: u64,
    budget: u64,
) -> Result<Vec<f64>> {
    if !(n_scale >= 1.0) {
        return Err(Error::ParameterDomain {
            field: "N",
            value: n_scale,
            domain: "[1, ∞)",
        });
    }
    check_times(grid, horizon)?;
    let norm = n_scale.powf(params.alpha());
    let times: Vec<f64> = grid.iter().map(|&t| t * n_scale).collect();
    let mut walker = Walker::new(env, params, noise_seed);
    match observe(&mut walker, &times, budget) {
        Ok(obs) => Ok(obs.positions.iter().map(|&p| p as f64 / norm).collect()),
        Err(Error::PartialResult { covered, prefix, .. }) => Err(Error::PartialResult {
            covered: covered / n_scale,
            requested: horizon,
            prefix: prefix.iter().map(|p| p / norm).collect(),
        }),
        Err(e) => Err(e),
    }
}

/// `sup_{t ≤ T} |X^{(N)}_t - max_{s ≤ t} X^{(N)}_s|`: the largest backtrack
/// over the steps taken by time `TN`, divided by `N^α`.
pub fn sup_gap_running_max(traj: &Trajectory, n_scale: f64, horizon: f64) -> Result<f64> {
    let limit = horizon * n_scale;
    if traj.covered_time() < limit {
        return Err(Error::TrajectoryExhausted {
            t: limit,
            covered: traj.covered_time(),
        });
    }
    let mut run_max = 0i64;
    let mut worst = 0i64;
    for row in traj.rows() {
        if row.clock > limit {
            break;
        }
        run_max = run_max.max(row.position);
        worst = worst.max(run_max - row.position);
    }
    Ok(worst as f64 / n_scale.powf(traj.params().alpha()))
}

#[derive(Debug, Clone)]
pub struct ScalingOutcome {
    /// `X^{(N)}_t` per trial.
    pub samples: Vec<f64>,
    /// Running-max gap over `[0, t]` per trial.
    pub gaps: Vec<f64>,
    /// `v# V^{-1}(t)` reference draws.
    pub reference: Vec<f64>,
    pub ks: f64,
    pub report: ExperimentReport,
}

/// Samples `X^{(N)}_t` over fresh environments and compares with
/// `reference_count` exact draws of `v# V^{-1}(t)`.
pub fn scaling_experiment(cfg: &LabConfig, n_scale: f64, t: f64, reference_count: u64) -> Result<ScalingOutcome> {
    cfg.check_trials()?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be > 0, got {t}")));
    }
    if reference_count == 0 {
        return Err(Error::Domain("reference sample must be nonempty".into()));
    }
    let params = cfg.params;
    let alpha = params.alpha();
    let horizon = t * n_scale;
    let budget = time_budget(&params, horizon);
    let norm = n_scale.powf(alpha);
    let results = run_trials(cfg.trials, cfg.exec, |i| {
        let env = cfg.environment(i);
        let mut walker = Walker::new(&env, &params, cfg.noise_seed(i));
        observe(&mut walker, &[horizon], budget).map(|o| (o.positions[0] as f64 / norm, o.backtrack as f64 / norm))
    });
    let mut samples = Vec::with_capacity(results.len());
    let mut gaps = Vec::with_capacity(results.len());
    for r in results {
        let (x, gap) = r.map_err(|e| match e {
            Error::PartialResult { .. } => Error::RunawaySimulation { budget },
            e => e,
        })?;
        samples.push(x);
        gaps.push(gap);
    }
    let vs = params.v_sharp();
    let reference: Vec<f64> = run_trials(reference_count, cfg.exec, |i| {
        let mut rng = CounterRng::new(cfg.stream_seed(Purpose::Reference, i));
        vs * sample_inverse_marginal(alpha, t, &mut rng).expect("alpha validated")
    });
    let ks = ks_two_sample(&samples, &reference)?;

    let mut report = ExperimentReport::new("scaling", &["trial", "scaled_position", "sup_gap"]);
    for (i, (x, g)) in samples.iter().zip(&gaps).enumerate() {
        report.push_row(vec![i as f64, *x, *g]);
    }
    let m: RunningMoments = samples.iter().copied().collect();
    let r: RunningMoments = reference.iter().copied().collect();
    report
        .set("alpha", alpha)
        .set("epsilon", params.epsilon())
        .set("n_scale", n_scale)
        .set("t", t)
        .set("seed", cfg.seed)
        .set("trials", cfg.trials)
        .set("reference_samples", reference_count)
        .set("mean", m.mean())
        .set("mean_std_error", m.std_error())
        .set("target_mean", r.mean())
        .set("target_mean_std_error", r.std_error())
        .set("ks", ks)
        .set("max_sup_gap", gaps.iter().cloned().fold(0.0, f64::max));
    Ok(ScalingOutcome {
        samples,
        gaps,
        reference,
        ks,
        report,
    })
}

/// `exp(-(απ / sin απ) v^{-α} β^α u)`.
pub fn hitting_laplace_target(params: &ModelParams, u: f64, beta: f64) -> f64 {
    (-params.laplace_constant() * beta.powf(params.alpha()) * u).exp()
}

#[derive(Debug, Clone)]
pub struct HittingLaplaceOutcome {
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    pub report: ExperimentReport,
}

/// Beyond this exponent `e^{-x}` is zero in double precision.
const EXP_UNDERFLOW: f64 = 750.0;

/// Estimates `E[exp(-β N^{-1/α} H_{⌊uN⌋})]` over fresh environments.
///
/// A walk whose scaled clock already exceeds the underflow point is stopped
/// early; its contribution is exactly zero either way.
pub fn hitting_laplace_check(cfg: &LabConfig, n_scale: f64, u: f64, beta: f64) -> Result<HittingLaplaceOutcome> {
    cfg.check_trials()?;
    if !(u > 0.0) {
        return Err(Error::ParameterDomain {
            field: "u",
            value: u,
            domain: "(0, ∞)",
        });
    }
    if !(beta > 0.0) {
        return Err(Error::ParameterDomain {
            field: "beta",
            value: beta,
            domain: "(0, ∞)",
        });
    }
    let params = cfg.params;
    let target_site = (u * n_scale).floor() as i64;
    if target_site < 1 {
        return Err(Error::Domain(format!("uN must be >= 1, got {}", u * n_scale)));
    }
    let scale = beta / n_scale.powf(1.0 / params.alpha());
    let cutoff = EXP_UNDERFLOW / scale;
    let budget = site_budget(&params, target_site);
    let values = run_trials(cfg.trials, cfg.exec, |i| {
        let env = cfg.environment(i);
        let mut walker = Walker::new(&env, &params, cfg.noise_seed(i));
        while walker.position() != target_site {
            if walker.steps() >= budget {
                return Err(Error::RunawaySimulation { budget });
            }
            walker.step();
            if walker.clock() > cutoff {
                return Ok((0.0, walker.clock(), false));
            }
        }
        let h = walker.clock();
        Ok(((-scale * h).exp(), h, true))
    });
    let mut report = ExperimentReport::new(
        "hitting_laplace",
        &["trial", "laplace_value", "hitting_time", "completed"],
    );
    let mut m = RunningMoments::new();
    for (i, v) in values.into_iter().enumerate() {
        let (value, h, done) = v?;
        m.push(value);
        report.push_row(vec![i as f64, value, h, if done { 1.0 } else { 0.0 }]);
    }
    let target = hitting_laplace_target(&params, u, beta);
    report
        .set("alpha", params.alpha())
        .set("epsilon", params.epsilon())
        .set("n_scale", n_scale)
        .set("u", u)
        .set("beta", beta)
        .set("seed", cfg.seed)
        .set("trials", cfg.trials)
        .set("estimate", m.mean())
        .set("std_error", m.std_error())
        .set("ci_lower", m.mean() - 1.96 * m.std_error())
        .set("ci_upper", m.mean() + 1.96 * m.std_error())
        .set("target", target)
        .set("abs_error", (m.mean() - target).abs());
    Ok(HittingLaplaceOutcome {
        estimate: m.mean(),
        std_error: m.std_error(),
        target,
        report,
    })
}
