//! One variant per experiment command, and what each one writes.

use anyhow::{bail, Context};
use clap::Subcommand;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use traplab::lab::{self, ExperimentReport, LabConfig};
use traplab::model::Environment;
use traplab::parallel::{run_trials, Execution};
use traplab::rng::{derive_seed, CounterRng, Purpose};
use traplab::stable::{arcsine_cdf, PositiveStable};
use traplab::stats::RunningMoments;
use traplab::walk::{simulate_to_site, simulate_to_time};

use crate::output::{csv_bytes, json_bytes, OutputFile};
use crate::settings::{parse_count, parse_site, Settings};
use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    /// Simulate one walk and export its embedded path with the clock.
    Simulate {
        /// Stop on first arrival at this site.
        #[arg(long, value_parser = parse_site, conflicts_with = "target_time")]
        target_site: Option<i64>,
        /// Stop once the clock exceeds this time.
        #[arg(long)]
        target_time: Option<f64>,
        /// Keep every `stride`-th row (the last row is always kept).
        #[arg(long, default_value = "1", value_parser = parse_count)]
        stride: u64,
    },
    /// P(X_{th} = X_t) against the generalized arcsine law.
    Aging {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        h: f64,
    },
    /// X_{tN}/N^α against v# V^{-1}(t).
    Scaling {
        #[arg(long)]
        n: f64,
        #[arg(long, default_value = "1")]
        t: f64,
        /// Number of exact reference draws.
        #[arg(long, default_value = "1e5", value_parser = parse_count)]
        reference: u64,
    },
    /// Frequency of X_t sitting in the last deep trap reached.
    Localization {
        #[arg(long)]
        t: f64,
    },
    /// Undershoot and overshoot of renewal sums of trap passage times.
    Dynkin {
        /// Defaults to the smallest horizon with 50 expected renewals.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Laplace transform of the one-sided stable sampler.
    Subordinator {
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        samples: u64,
        #[arg(long, default_value = "1")]
        lambda: f64,
    },
    /// Tabulate arcsine_cdf on a grid `start:stop:step`.
    ArcsineTable {
        #[arg(long, default_value = "0:1:0.05")]
        grid: String,
    },
    /// Frequencies of the environment events E1, E2, E3.
    Envstats {
        #[arg(long, value_parser = parse_count)]
        n: u64,
    },
    /// Frequencies of E(n), A(n), I(n) and B(n).
    Events {
        #[arg(long, value_parser = parse_count)]
        n: u64,
    },
    /// Laplace transform of the rescaled hitting time of uN.
    Hitting {
        #[arg(long)]
        n: f64,
        #[arg(long, default_value = "1")]
        u: f64,
        #[arg(long, default_value = "1")]
        beta: f64,
    },
    /// Laplace transform of the occupation time of a deep trap.
    TrapLaplace {
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[arg(long, default_value = "1")]
        lambda: f64,
    },
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Simulate { .. } => "simulate",
            Job::Aging { .. } => "aging",
            Job::Scaling { .. } => "scaling",
            Job::Localization { .. } => "localization",
            Job::Dynkin { .. } => "dynkin",
            Job::Subordinator { .. } => "subordinator",
            Job::ArcsineTable { .. } => "arcsine-table",
            Job::Envstats { .. } => "envstats",
            Job::Events { .. } => "events",
            Job::Hitting { .. } => "hitting",
            Job::TrapLaplace { .. } => "trap-laplace",
        }
    }
}

fn with_verdict(report: &mut ExperimentReport, tolerance: f64, pass: bool) {
    report.set("tolerance", tolerance).set("pass", pass);
}

fn finish(name: &str, report: &ExperimentReport) -> anyhow::Result<Vec<OutputFile>> {
    Ok(vec![
        OutputFile::new(
            format!("{name}.json"),
            json_bytes(&Value::Object(report.summary.clone()))?,
        ),
        OutputFile::new(format!("{name}.csv"), csv_bytes(&report.columns, &report.rows)?),
    ])
}

fn grid_points(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| UsageError(format!("grid `{spec}` must be start:stop:step")))?;
    let [a, b, h] = parts[..] else {
        bail!(UsageError(format!("grid `{spec}` must be start:stop:step")));
    };
    if !(h > 0.0 && b >= a) {
        bail!(UsageError(format!("grid `{spec}` needs step > 0 and stop >= start")));
    }
    let count = ((b - a) / h + 1e-9).floor() as u64;
    Ok((0..=count).map(|i| (a + i as f64 * h).min(b)).collect())
}

pub fn run(job: &Job, s: &Settings, exec: Execution) -> anyhow::Result<Vec<OutputFile>> {
    let params = s.params()?;
    let cfg = LabConfig::new(params, s.seed, s.trials)
        .with_scales(s.scales()?)
        .with_exec(exec);
    let name = job.name();
    match *job {
        Job::Simulate {
            target_site,
            target_time,
            stride,
        } => {
            let env = Environment::pareto(params.alpha(), derive_seed(s.seed, Purpose::Environment, 0))?;
            let noise = derive_seed(s.seed, Purpose::Noise, 0);
            let traj = match (target_site, target_time) {
                (Some(x), None) => simulate_to_site(&env, &params, x, noise)?,
                (None, Some(t)) => {
                    let budget = (1e3 * t.max(1.0).powf(params.alpha()) / params.v()).ceil() as u64 + 10_000_000;
                    simulate_to_time(&env, &params, t, noise, budget)?
                }
                _ => bail!(UsageError(
                    "simulate needs exactly one of --target-site, --target-time".into()
                )),
            };
            let rows: Vec<Vec<f64>> = traj
                .export_rows(stride)
                .iter()
                .map(|r| vec![r.step as f64, r.position as f64, r.clock])
                .collect();
            let mut report = ExperimentReport::new("simulate", &["step", "position", "clock"]);
            report
                .set("alpha", params.alpha())
                .set("epsilon", params.epsilon())
                .set("seed", s.seed)
                .set("steps", traj.len())
                .set("final_position", traj.final_position())
                .set("covered_time", traj.covered_time())
                .set("max_backtrack", traj.max_backtrack());
            if let Some(x) = target_site {
                report.set("target_site", x);
            }
            if let Some(t) = target_time {
                report.set("target_time", t);
            }
            report.rows = rows;
            Ok(vec![
                OutputFile::new("trajectory.csv".into(), csv_bytes(&report.columns, &report.rows)?),
                OutputFile::new("simulate.json".into(), json_bytes(&Value::Object(report.summary))?),
            ])
        }
        Job::Aging { t, h } => {
            let mut out = lab::aging_estimate(&cfg, t, h)?;
            let tol = s.tolerance.unwrap_or(0.05);
            let pass = (out.ci.estimate - out.target).abs() <= tol;
            with_verdict(&mut out.report, tol, pass);
            finish(name, &out.report)
        }
        Job::Scaling { n, t, reference } => {
            let mut out = lab::scaling_experiment(&cfg, n, t, reference)?;
            let tol = s.tolerance.unwrap_or(0.05);
            with_verdict(&mut out.report, tol, out.ks <= tol);
            finish(name, &out.report)
        }
        Job::Localization { t } => {
            let mut out = lab::localization_estimate(&cfg, t, s.c_prime, s.beta_exp)?;
            let tol = s.tolerance.unwrap_or(0.2);
            let pass = out.localized.estimate >= 1.0 - tol && out.straddle.estimate >= 1.0 - tol;
            with_verdict(&mut out.report, tol, pass);
            finish(name, &out.report)
        }
        Job::Dynkin { t } => {
            let t = match t {
                Some(t) => t,
                None => lab::renewal_horizon(&params, &cfg.scales, 50.0)?,
            };
            let mut out = lab::dynkin_renewal_check(&cfg, t, s.c_prime)?;
            let tol = s.tolerance.unwrap_or(0.05);
            let pass = out.ks_undershoot <= tol && out.ks_overshoot <= tol;
            with_verdict(&mut out.report, tol, pass);
            finish(name, &out.report)
        }
        Job::Subordinator { samples, lambda } => {
            if samples == 0 {
                bail!(UsageError("--samples must be at least 1".into()));
            }
            if !(lambda >= 0.0) {
                bail!(UsageError(format!("--lambda must be >= 0, got {lambda}")));
            }
            let law = PositiveStable::new(params.alpha())?;
            let draws = run_trials(samples, exec, |i| {
                let mut rng = CounterRng::new(derive_seed(s.seed, Purpose::Stable, i));
                let u = rng.open01();
                let e = -rng.open01().ln();
                law.from_parts(u, e)
            });
            let m: RunningMoments = draws.iter().map(|&x| (-lambda * x).exp()).collect();
            let target = (-lambda.powf(params.alpha())).exp();
            let mut report = ExperimentReport::new("subordinator", &["sample", "value"]);
            report.rows = draws.iter().enumerate().map(|(i, &x)| vec![i as f64, x]).collect();
            report
                .set("alpha", params.alpha())
                .set("lambda", lambda)
                .set("samples", samples)
                .set("seed", s.seed)
                .set("estimate", m.mean())
                .set("std_error", m.std_error())
                .set("target", target)
                .set("abs_error", (m.mean() - target).abs());
            let tol = s.tolerance.unwrap_or(4.0 * m.std_error());
            with_verdict(&mut report, tol, (m.mean() - target).abs() <= tol);
            finish(name, &report)
        }
        Job::ArcsineTable { ref grid } => {
            let xs = grid_points(grid)?;
            let mut report = ExperimentReport::new("arcsine_table", &["x", "cdf"]);
            for &x in &xs {
                let v = arcsine_cdf(params.alpha(), x).context("grid point outside [0, 1]")?;
                report.push_row(vec![x, v]);
            }
            report
                .set("alpha", params.alpha())
                .set("grid", grid.as_str())
                .set("points", xs.len());
            Ok(vec![
                OutputFile::new("arcsine_table.csv".into(), csv_bytes(&report.columns, &report.rows)?),
                OutputFile::new("arcsine_table.json".into(), json_bytes(&Value::Object(report.summary))?),
            ])
        }
        Job::Envstats { n } => {
            let mut report = lab::environment_events(&cfg, n)?;
            let tol = s.tolerance.unwrap_or(0.1);
            let pass = report.get_f64("p_e").unwrap() >= 1.0 - tol;
            with_verdict(&mut report, tol, pass);
            finish(name, &report)
        }
        Job::Events { n } => {
            let mut out = lab::high_probability_events(&cfg, n, s.c_prime)?;
            let tol = s.tolerance.unwrap_or(0.1);
            let pass = [&out.e, &out.a, &out.i, &out.b]
                .iter()
                .all(|ci| ci.estimate >= 1.0 - tol);
            with_verdict(&mut out.report, tol, pass);
            finish(name, &out.report)
        }
        Job::Hitting { n, u, beta } => {
            let mut out = lab::hitting_laplace_check(&cfg, n, u, beta)?;
            let tol = s.tolerance.unwrap_or(0.03);
            let pass = (out.estimate - out.target).abs() <= tol;
            with_verdict(&mut out.report, tol, pass);
            finish(name, &out.report)
        }
        Job::TrapLaplace { n, lambda } => {
            let mut out = lab::trap_laplace_check(&cfg, n, &[lambda])?;
            let tol = s.tolerance.unwrap_or(0.1);
            let pass = (out.estimates[0] / out.targets[0] - 1.0).abs() <= tol;
            with_verdict(&mut out.report, tol, pass);
            finish(name, &out.report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(grid_points("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid_points("0:1:0.1").unwrap().len(), 11);
        assert!(grid_points("0:1").is_err());
        assert!(grid_points("1:0:0.1").is_err());
    }

    #[test]
    fn job_round_trips_through_json() {
        let j = Job::Aging { t: 1e8, h: 2.0 };
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"command\":\"aging\""));
        assert_eq!(serde_json::from_str::<Job>(&text).unwrap(), j);
    }
}
