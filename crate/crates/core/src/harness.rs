//! Running either sampler for a fixed gradient-evaluation budget and
//! turning the output into an autocorrelation curve. Shared by the
//! `autocorr` and `tune` commands.

use crate::diagnostics::{autocorrelation, fit_decay, AutocorrSeries, DecayFit};
use crate::energy::EnergyFunction;
use crate::hmc::{HmcChain, HmcConfig};
use crate::phase::PhaseState;
use crate::rng::{derive_seed, derived};
use crate::sampler::{systematic_indices, MjhmcChain, SamplerConfig};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Mjhmc,
    Hmc,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Mjhmc => "mjhmc",
            SamplerKind::Hmc => "hmc",
        })
    }
}

/// `beta` is a Poisson rate for MJHMC and a per-step probability for HMC.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerParams {
    pub epsilon: f64,
    pub steps: usize,
    pub beta: f64,
}

impl SamplerParams {
    /// MJHMC optimum reported for the rough well.
    pub const ROUGH_WELL_MJHMC: SamplerParams = SamplerParams {
        epsilon: 3.0,
        steps: 25,
        beta: 0.012314,
    };
    /// HMC control optimum reported for the rough well.
    pub const ROUGH_WELL_HMC: SamplerParams = SamplerParams {
        epsilon: 0.591686,
        steps: 25,
        beta: 0.429956,
    };

    pub fn validate(&self, kind: SamplerKind) -> Result<()> {
        match kind {
            SamplerKind::Mjhmc => SamplerConfig::new(self.epsilon, self.steps, self.beta, 1, 0).map(|_| ()),
            SamplerKind::Hmc => HmcConfig::new(self.epsilon, self.steps, self.beta, 1, 0).map(|_| ()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSettings {
    /// Gradient evaluations kept for analysis.
    #[serde(default = "BudgetSettings::default_budget")]
    pub gradient_budget: u64,
    /// Gradient evaluations discarded before the kept window.
    #[serde(default)]
    pub burn_in_evals: u64,
    #[serde(default = "BudgetSettings::default_lags")]
    pub n_lags: usize,
    /// Largest lag as a fraction of `gradient_budget`.
    #[serde(default = "BudgetSettings::default_lag_fraction")]
    pub max_lag_fraction: f64,
}

impl BudgetSettings {
    fn default_budget() -> u64 {
        500_000
    }
    fn default_lags() -> usize {
        200
    }
    fn default_lag_fraction() -> f64 {
        0.1
    }

    pub fn validate(&self) -> Result<()> {
        if self.gradient_budget == 0 {
            return Err(Error::invalid("gradient_budget", "must be positive"));
        }
        if self.n_lags < 4 {
            return Err(Error::invalid("n_lags", "the decay fit needs at least 4 lags"));
        }
        if !(self.max_lag_fraction > 0.0 && self.max_lag_fraction <= 1.0) {
            return Err(Error::invalid("max_lag_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn max_lag(&self) -> f64 {
        self.gradient_budget as f64 * self.max_lag_fraction
    }
}

impl Default for BudgetSettings {
    fn default() -> Self {
        BudgetSettings {
            gradient_budget: Self::default_budget(),
            burn_in_evals: 0,
            n_lags: Self::default_lags(),
            max_lag_fraction: Self::default_lag_fraction(),
        }
    }
}

/// Unweighted positions on the gradient-evaluation axis. For MJHMC these
/// are the holding-time resampled states.
#[derive(Clone, Debug)]
pub struct BudgetRun {
    pub positions: Vec<Vec<f64>>,
    pub gradient_evals: Vec<u64>,
    /// Raw chain length after burn-in, before any resampling.
    pub raw_samples: usize,
    pub total_gradient_evals: u64,
    /// HMC only.
    pub acceptance_rate: Option<f64>,
}

/// Runs `kind` until `burn_in + budget` gradient evaluations have been
/// spent. The initial momentum and the resampling offset come from streams
/// derived from `seed`.
pub fn run_for_budget<E: EnergyFunction>(
    kind: SamplerKind,
    params: &SamplerParams,
    ef: E,
    init_position: &[f64],
    settings: &BudgetSettings,
    seed: u64,
) -> Result<BudgetRun> {
    settings.validate()?;
    params.validate(kind)?;
    let init = PhaseState::with_random_momentum(init_position.to_vec(), &mut derived(seed, &[0]))?;
    let chain_seed = derive_seed(seed, &[1]);
    let stop = settings.burn_in_evals + settings.gradient_budget;
    match kind {
        SamplerKind::Mjhmc => {
            let config = SamplerConfig::new(params.epsilon, params.steps, params.beta, 1, chain_seed)?;
            let mut chain = MjhmcChain::new(config, ef, init)?;
            let mut kept = Vec::new();
            while chain.gradient_evals() < stop {
                let s = chain.step()?;
                if s.cumulative_gradient_evals >= settings.burn_in_evals {
                    kept.push(s);
                }
            }
            if kept.is_empty() {
                return Err(Error::EmptyInput("no samples after burn-in"));
            }
            let weights: Vec<f64> = kept.iter().map(|s| s.holding_time).collect();
            let idx = systematic_indices(&weights, kept.len(), &mut derived(seed, &[2]))?;
            Ok(BudgetRun {
                positions: idx.iter().map(|&i| kept[i].state.x.clone()).collect(),
                gradient_evals: idx.iter().map(|&i| kept[i].cumulative_gradient_evals).collect(),
                raw_samples: kept.len(),
                total_gradient_evals: chain.gradient_evals(),
                acceptance_rate: None,
            })
        }
        SamplerKind::Hmc => {
            let config = HmcConfig::new(params.epsilon, params.steps, params.beta, 1, chain_seed)?;
            let mut chain = HmcChain::new(config, ef, init)?;
            let mut positions = Vec::new();
            let mut counts = Vec::new();
            while chain.gradient_evals() < stop {
                let s = chain.step()?;
                if s.cumulative_gradient_evals >= settings.burn_in_evals {
                    positions.push(s.state.x);
                    counts.push(s.cumulative_gradient_evals);
                }
            }
            Ok(BudgetRun {
                raw_samples: positions.len(),
                positions,
                gradient_evals: counts,
                total_gradient_evals: chain.gradient_evals(),
                acceptance_rate: Some(chain.acceptance_rate()),
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct AutocorrRun {
    pub series: AutocorrSeries,
    pub fit: DecayFit,
    pub run: BudgetRun,
}

pub fn autocorr_for<E: EnergyFunction>(
    kind: SamplerKind,
    params: &SamplerParams,
    ef: E,
    init_position: &[f64],
    settings: &BudgetSettings,
    seed: u64,
) -> Result<AutocorrRun> {
    let run = run_for_budget(kind, params, ef, init_position, settings, seed)?;
    let series = autocorrelation(&run.positions, &run.gradient_evals, settings.max_lag(), settings.n_lags)?;
    let fit = fit_decay(&series)?;
    Ok(AutocorrRun { series, fit, run })
}
