//! Flag parsing and the resolved parameter set.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use traplab::lab::{default_beta_exp, default_c_prime};
use traplab::model::{ModelParams, ScaleExponents};

/// Parses a nonnegative integer that may be written in scientific notation.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(x >= 0.0) || x.fract() != 0.0 || x > u64::MAX as f64 {
        return Err(format!("`{s}` is not a nonnegative integer"));
    }
    Ok(x as u64)
}

pub fn parse_site(s: &str) -> Result<i64, String> {
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.fract() != 0.0 || x.abs() > i64::MAX as f64 {
        return Err(format!("`{s}` is not an integer"));
    }
    Ok(x as i64)
}

/// Values read from `--config FILE`. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub c_prime: Option<f64>,
    pub beta_exp: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Everything that determines an experiment's output. Worker count and
/// output location are deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub alpha: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub trials: u64,
    pub kappa: f64,
    pub gamma: f64,
    pub c_prime: Option<f64>,
    pub beta_exp: Option<f64>,
    pub tolerance: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        let s = ScaleExponents::default();
        Self {
            alpha: 0.5,
            epsilon: 0.25,
            seed: 1,
            trials: 1000,
            kappa: s.kappa,
            gamma: s.gamma,
            c_prime: None,
            beta_exp: None,
            tolerance: None,
        }
    }
}

impl Settings {
    pub fn params(&self) -> Result<ModelParams, traplab::Error> {
        ModelParams::new(self.alpha, self.epsilon)
    }

    pub fn scales(&self) -> Result<ScaleExponents, traplab::Error> {
        ScaleExponents::new(self.kappa, self.gamma)
    }

    /// Checks every field against its domain; failures are usage errors.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.params()?;
        self.scales()?;
        if self.trials == 0 {
            bail!("parameter `trials` must be at least 1");
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                bail!("parameter `tolerance` = {t} must be positive");
            }
        }
        Ok(())
    }

    /// Validates and fills `c_prime` and `beta_exp` with their defaults, so a
    /// manifest records the values actually used.
    pub fn resolved(mut self) -> anyhow::Result<Self> {
        self.validate()?;
        let p = self.params()?;
        self.c_prime.get_or_insert(default_c_prime(&p));
        self.beta_exp.get_or_insert(default_beta_exp(self.alpha, self.gamma));
        Ok(self)
    }
}

pub struct Overrides {
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub c_prime: Option<f64>,
    pub beta_exp: Option<f64>,
    pub tolerance: Option<f64>,
}

/// Flags over file over defaults.
pub fn resolve(flags: Overrides, file: &FileConfig) -> Settings {
    let d = Settings::default();
    Settings {
        alpha: flags.alpha.or(file.alpha).unwrap_or(d.alpha),
        epsilon: flags.epsilon.or(file.epsilon).unwrap_or(d.epsilon),
        seed: flags.seed.or(file.seed).unwrap_or(d.seed),
        trials: flags.trials.or(file.trials).unwrap_or(d.trials),
        kappa: flags.kappa.or(file.kappa).unwrap_or(d.kappa),
        gamma: flags.gamma.or(file.gamma).unwrap_or(d.gamma),
        c_prime: flags.c_prime.or(file.c_prime),
        beta_exp: flags.beta_exp.or(file.beta_exp),
        tolerance: flags.tolerance.or(file.tolerance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_in_scientific_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert_eq!(parse_count("2.5e3"), Ok(2500));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_site("-1e2"), Ok(-100));
    }

    #[test]
    fn precedence() {
        let file = FileConfig {
            alpha: Some(0.3),
            epsilon: Some(0.1),
            ..Default::default()
        };
        let flags = Overrides {
            alpha: Some(0.7),
            epsilon: None,
            seed: None,
            trials: None,
            kappa: None,
            gamma: None,
            c_prime: None,
            beta_exp: None,
            tolerance: None,
        };
        let s = resolve(flags, &file);
        assert_eq!((s.alpha, s.epsilon, s.seed), (0.7, 0.1, 1));
    }
}
