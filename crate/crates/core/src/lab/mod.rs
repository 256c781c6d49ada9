//! Monte Carlo experiments confronting the simulator with the limit theorems.

mod aging;
mod events;
mod report;
mod scaling;

pub use aging::{
    aging_estimate, aging_ladder, dynkin_renewal_check, expected_renewals, localization_estimate, renewal_horizon,
    single_trap_environment, trap_clock, AgingOutcome, DynkinOutcome, LocalizationOutcome, TrapClock,
};
pub use events::{
    backtrack_after_exit_check, environment_events, high_probability_events, shallow_time_check, trap_laplace_check,
    EventFrequencies, TrapLaplaceOutcome,
};
pub use report::{ExperimentReport, SCHEMA_VERSION};
pub use scaling::{
    hitting_laplace_check, hitting_laplace_target, scaled_path, scaling_experiment, sup_gap_running_max,
    HittingLaplaceOutcome, ScalingOutcome,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{critical_depth, DepthLaw, Environment, ModelParams, ScaleExponents};
use crate::parallel::Execution;
use crate::rng::{derive_seed, Purpose};

/// Where each trial's environment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvFamily {
    /// A fresh environment per trial with the given law.
    Random(DepthLaw),
    /// The same environment in every trial.
    Fixed(Environment),
}

impl Default for EnvFamily {
    fn default() -> Self {
        EnvFamily::Random(DepthLaw::Pareto)
    }
}

/// Inputs shared by every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub params: ModelParams,
    pub scales: ScaleExponents,
    pub seed: u64,
    pub trials: u64,
    pub exec: Execution,
    pub family: EnvFamily,
}

impl LabConfig {
    pub fn new(params: ModelParams, seed: u64, trials: u64) -> Self {
        Self {
            params,
            scales: ScaleExponents::default(),
            seed,
            trials,
            exec: Execution::default(),
            family: EnvFamily::default(),
        }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_scales(mut self, scales: ScaleExponents) -> Self {
        self.scales = scales;
        self
    }

    pub fn with_family(mut self, family: EnvFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn environment(&self, trial: u64) -> Environment {
        match &self.family {
            EnvFamily::Random(law) => Environment::new(
                self.params.alpha(),
                derive_seed(self.seed, Purpose::Environment, trial),
                *law,
            )
            .expect("alpha validated by ModelParams"),
            EnvFamily::Fixed(env) => env.clone(),
        }
    }

    pub fn noise_seed(&self, trial: u64) -> u64 {
        derive_seed(self.seed, Purpose::Noise, trial)
    }

    pub fn stream_seed(&self, purpose: Purpose, trial: u64) -> u64 {
        derive_seed(self.seed, purpose, trial)
    }

    fn check_trials(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// `⌈-2α / ((1-α) ln r)⌉ + 1`, the smallest integer comfortably above the
/// threshold that makes backtracking past `δ_j` negligible.
pub fn minimal_c_prime(params: &ModelParams) -> f64 {
    let r = params.r();
    if r == 0.0 {
        return 1.0;
    }
    let a = params.alpha();
    (-2.0 * a / ((1.0 - a) * r.ln())).ceil() + 1.0
}

/// `⌈-(2α/(1-α) + 2) / ln r⌉`: at desk-scale horizons the leading-order
/// choice leaves `ν̄` too short for the return probability `r^ν̄` to be small
/// against the number of deep traps.
pub fn default_c_prime(params: &ModelParams) -> f64 {
    let r = params.r();
    if r == 0.0 {
        return 1.0;
    }
    let a = params.alpha();
    (-(2.0 * a / (1.0 - a) + 2.0) / r.ln()).ceil()
}

/// `(1/α)(2α/(1-α) + 1 + γ) + 1/2`.
pub fn default_beta_exp(alpha: f64, gamma: f64) -> f64 {
    (2.0 * alpha / (1.0 - alpha) + 1.0 + gamma) / alpha + 0.5
}

/// `ν̄(n) = ⌊C′ ln ln n⌋`, at least 1, and exactly 1 when the walk is fully
/// directed.
pub fn nu_bar(params: &ModelParams, c_prime: f64, n: u64) -> u64 {
    if params.r() == 0.0 {
        return 1;
    }
    let ll = (n as f64).ln().ln();
    ((c_prime * ll).floor() as u64).max(1)
}

/// Scales attached to an observation time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgingScales {
    pub t: f64,
    pub n_t: u64,
    pub c_prime: f64,
    pub nu_bar: u64,
    pub beta_exp: f64,
    pub g: f64,
    pub nu: u64,
    pub phi: f64,
}

impl AgingScales {
    pub fn new(
        params: &ModelParams,
        scales: &ScaleExponents,
        t: f64,
        c_prime: Option<f64>,
        beta_exp: Option<f64>,
    ) -> Result<Self> {
        if !(t >= 16.0) {
            return Err(Error::ParameterDomain {
                field: "t",
                value: t,
                domain: "[16, ∞)",
            });
        }
        let alpha = params.alpha();
        let c_prime = c_prime.unwrap_or_else(|| default_c_prime(params));
        if params.r() > 0.0 {
            let floor = -2.0 * alpha / ((1.0 - alpha) * params.r().ln());
            if !(c_prime > floor) {
                return Err(Error::ParameterDomain {
                    field: "c_prime",
                    value: c_prime,
                    domain: "(-2α/((1-α) ln r), ∞)",
                });
            }
        }
        let beta_floor = (2.0 * alpha / (1.0 - alpha) + 1.0 + scales.gamma) / alpha;
        let beta_exp = beta_exp.unwrap_or_else(|| default_beta_exp(alpha, scales.gamma));
        if !(beta_exp > beta_floor) {
            return Err(Error::ParameterDomain {
                field: "beta_exp",
                value: beta_exp,
                domain: "((1/α)(2α/(1-α)+1+γ), ∞)",
            });
        }
        let n_t = ((t.powf(alpha) * t.ln().ln()).floor() as u64).max(2);
        let g = critical_depth(n_t, alpha)?;
        Ok(Self {
            t,
            n_t,
            c_prime,
            nu_bar: nu_bar(params, c_prime, n_t),
            beta_exp,
            g,
            nu: scales.nu(n_t),
            phi: crate::model::pareto_survival(g, alpha),
        })
    }
}
