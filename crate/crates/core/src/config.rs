//! TOML run configuration shared by all CLI commands.
//!
//! ```toml
//! seed = 7
//!
//! [target]
//! kind = "gaussian"
//! precision_diag = [1.0, 1.0]
//!
//! [sample]
//! sampler = "mjhmc"
//! epsilon = 0.5
//! steps = 10
//! beta = 0.1
//! n_samples = 100
//! ```
//!
//! Every section except `seed` and `target` is optional and falls back to
//! its defaults. Unknown keys are rejected everywhere.

use crate::energy::TargetSpec;
use crate::harness::{BudgetSettings, SamplerKind, SamplerParams};
use crate::ladder::LadderExperiment;
use crate::tuner::SearchSpace;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub spectral_gap: LadderExperiment,
    #[serde(default)]
    pub autocorr: AutocorrSection,
    #[serde(default)]
    pub tune: TuneSection,
    #[serde(default)]
    pub check: CheckSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Zeros when absent.
    #[serde(default)]
    pub init_position: Option<Vec<f64>>,
    /// Drawn from the momentum distribution when absent.
    #[serde(default)]
    pub init_momentum: Option<Vec<f64>>,
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Mjhmc
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_steps() -> usize {
    10
}
fn default_beta() -> f64 {
    0.1
}
fn default_n_samples() -> usize {
    1000
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection {
            sampler: default_sampler(),
            epsilon: default_epsilon(),
            steps: default_steps(),
            beta: default_beta(),
            n_samples: default_n_samples(),
            init_position: None,
            init_momentum: None,
        }
    }
}

impl SampleSection {
    pub fn params(&self) -> SamplerParams {
        SamplerParams {
            epsilon: self.epsilon,
            steps: self.steps,
            beta: self.beta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrSection {
    #[serde(default = "default_rough_well_mjhmc")]
    pub mjhmc: SamplerParams,
    #[serde(default = "default_rough_well_hmc")]
    pub hmc: SamplerParams,
    #[serde(default)]
    pub budget: BudgetSettings,
    #[serde(default)]
    pub init_position: Option<Vec<f64>>,
}

fn default_rough_well_mjhmc() -> SamplerParams {
    SamplerParams::ROUGH_WELL_MJHMC
}
fn default_rough_well_hmc() -> SamplerParams {
    SamplerParams::ROUGH_WELL_HMC
}

impl Default for AutocorrSection {
    fn default() -> Self {
        AutocorrSection {
            mjhmc: default_rough_well_mjhmc(),
            hmc: default_rough_well_hmc(),
            budget: BudgetSettings::default(),
            init_position: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSection {
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub space: SearchSpace,
    #[serde(default = "default_tune_budget")]
    pub budget: BudgetSettings,
    #[serde(default)]
    pub init_position: Option<Vec<f64>>,
}

fn default_trials() -> usize {
    50
}
fn default_tune_budget() -> BudgetSettings {
    BudgetSettings {
        gradient_budget: 100_000,
        ..BudgetSettings::default()
    }
}

impl Default for TuneSection {
    fn default() -> Self {
        TuneSection {
            sampler: default_sampler(),
            trials: default_trials(),
            space: SearchSpace::default(),
            budget: default_tune_budget(),
            init_position: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Random ladders per ladder check.
    #[serde(default = "default_check_ladders")]
    pub ladders: usize,
    #[serde(default = "default_check_min_k")]
    pub min_rungs: usize,
    #[serde(default = "default_check_max_k")]
    pub max_rungs: usize,
    #[serde(default = "default_race_trials")]
    pub race_trials: usize,
    #[serde(default = "default_holding_draws")]
    pub holding_draws: usize,
    /// Scales one rate of every ladder by `1 + fault_scale` before the
    /// balance and fixed-point checks.
    #[serde(default)]
    pub fault_injection: bool,
    #[serde(default = "default_fault_scale")]
    pub fault_scale: f64,
}

fn default_check_ladders() -> usize {
    100
}
fn default_check_min_k() -> usize {
    4
}
fn default_check_max_k() -> usize {
    128
}
fn default_race_trials() -> usize {
    200_000
}
fn default_holding_draws() -> usize {
    100_000
}
fn default_fault_scale() -> f64 {
    1e-3
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection {
            ladders: default_check_ladders(),
            min_rungs: default_check_min_k(),
            max_rungs: default_check_max_k(),
            race_trials: default_race_trials(),
            holding_draws: default_holding_draws(),
            fault_injection: false,
            fault_scale: default_fault_scale(),
        }
    }
}

impl CheckSection {
    pub fn validate(&self) -> Result<()> {
        if self.ladders == 0 {
            return Err(Error::invalid("check.ladders", "must be at least 1"));
        }
        if self.min_rungs < 3 || self.min_rungs > self.max_rungs {
            return Err(Error::invalid("check.min_rungs", "need 3 <= min_rungs <= max_rungs"));
        }
        if self.race_trials == 0 || self.holding_draws == 0 {
            return Err(Error::invalid("check", "trial counts must be positive"));
        }
        if !(self.fault_scale.is_finite() && self.fault_scale > -1.0) {
            return Err(Error::invalid("check.fault_scale", "must be finite and > -1"));
        }
        Ok(())
    }
}

fn check_position(name: &'static str, pos: &Option<Vec<f64>>, dim: usize) -> Result<()> {
    if let Some(p) = pos {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(name, "must be finite"));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Checks every section, not only the one a command will use, so a
    /// config file is either valid or not.
    pub fn validate(&self) -> Result<()> {
        self.target.build()?;
        let dim = self.target.dim();
        let s = &self.sample;
        s.params().validate(s.sampler)?;
        if s.n_samples == 0 {
            return Err(Error::invalid("sample.n_samples", "must be at least 1"));
        }
        check_position("sample.init_position", &s.init_position, dim)?;
        check_position("sample.init_momentum", &s.init_momentum, dim)?;
        self.spectral_gap.validate()?;
        self.autocorr.mjhmc.validate(SamplerKind::Mjhmc)?;
        self.autocorr.hmc.validate(SamplerKind::Hmc)?;
        self.autocorr.budget.validate()?;
        check_position("autocorr.init_position", &self.autocorr.init_position, dim)?;
        if self.tune.trials == 0 {
            return Err(Error::invalid("tune.trials", "must be at least 1"));
        }
        self.tune.space.validate()?;
        self.tune.budget.validate()?;
        check_position("tune.init_position", &self.tune.init_position, dim)?;
        self.check.validate()
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    /// SHA-256 of the resolved config (defaults filled in, seed override
    /// applied) in canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn zero_position(&self) -> Vec<f64> {
        vec![0.0; self.target.dim()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.target, TargetSpec::default());
        assert_eq!(c.autocorr.mjhmc, SamplerParams::ROUGH_WELL_MJHMC);
        assert_eq!(c.spectral_gap.draws_per_size, 250);
    }

    #[test]
    fn full_file_parses() {
        let c = RunConfig::from_toml_str(
            r#"
seed = 11
[target]
kind = "gaussian"
precision_diag = [1.0, 4.0]
[sample]
sampler = "hmc"
epsilon = 0.2
steps = 5
beta = 0.5
n_samples = 10
init_position = [1.0, 2.0]
[spectral_gap]
sizes = [4, 8]
draws_per_size = 3
[autocorr.budget]
gradient_budget = 1000
[tune]
trials = 2
[tune.space]
steps = { lo = 3, hi = 3 }
[check]
ladders = 5
"#,
        )
        .unwrap();
        assert_eq!(c.seed, 11);
        assert_eq!(c.sample.sampler, SamplerKind::Hmc);
        assert_eq!(c.spectral_gap.sizes, vec![4, 8]);
        assert_eq!(c.autocorr.budget.gradient_budget, 1000);
        assert_eq!(c.tune.space.steps.lo, 3);
        assert_eq!(c.check.ladders, 5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml_str("sed = 1"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml_str("[sample]\nepsilom = 0.1").is_err());
        assert!(RunConfig::from_toml_str("[target]\nkind = \"banana\"").is_err());
    }

    #[test]
    fn semantic_errors_rejected() {
        assert!(RunConfig::from_toml_str("[sample]\nepsilon = -1.0").is_err());
        assert!(RunConfig::from_toml_str("[sample]\ninit_position = [1.0]").is_err());
        assert!(RunConfig::from_toml_str("[spectral_gap]\nsizes = [2]").is_err());
        assert!(RunConfig::from_toml_str("[sample]\nsampler = \"hmc\"\nbeta = 2.0").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::from_toml_str("seed = 1").unwrap();
        let b = RunConfig::from_toml_str("seed = 1").unwrap();
        let c = a.clone().with_seed(Some(2));
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
