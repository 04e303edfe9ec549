//! Random search over `(epsilon, beta, steps)` minimizing the fitted decay
//! rate `Re(r)`.

use crate::diagnostics::tuning_objective;
use crate::energy::EnergyFunction;
use crate::harness::{autocorr_for, BudgetSettings, SamplerKind, SamplerParams};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Closed interval. `lo == hi` collapses the axis to a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    /// Log-uniform.
    #[serde(default = "SearchSpace::default_epsilon")]
    pub epsilon: Range<f64>,
    /// Log-uniform.
    #[serde(default = "SearchSpace::default_beta")]
    pub beta: Range<f64>,
    /// Uniform over integers.
    #[serde(default = "SearchSpace::default_steps")]
    pub steps: Range<usize>,
}

impl SearchSpace {
    fn default_epsilon() -> Range<f64> {
        Range { lo: 0.05, hi: 5.0 }
    }
    fn default_beta() -> Range<f64> {
        Range { lo: 0.005, hi: 0.9 }
    }
    fn default_steps() -> Range<usize> {
        Range { lo: 2, hi: 50 }
    }

    pub fn point(params: SamplerParams) -> Self {
        SearchSpace {
            epsilon: Range { lo: params.epsilon, hi: params.epsilon },
            beta: Range { lo: params.beta, hi: params.beta },
            steps: Range { lo: params.steps, hi: params.steps },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.lo > 0.0 && self.epsilon.lo <= self.epsilon.hi && self.epsilon.hi.is_finite()) {
            return Err(Error::invalid("epsilon", "need 0 < lo <= hi < inf"));
        }
        if !(self.beta.lo > 0.0 && self.beta.lo <= self.beta.hi && self.beta.hi <= 1.0) {
            return Err(Error::invalid("beta", "need 0 < lo <= hi <= 1"));
        }
        if !(self.steps.lo >= 1 && self.steps.lo <= self.steps.hi) {
            return Err(Error::invalid("steps", "need 1 <= lo <= hi"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplerParams {
        let log_uniform = |r: Range<f64>, rng: &mut R| {
            let u: f64 = rng.random();
            (r.lo.ln() + u * (r.hi.ln() - r.lo.ln())).exp().clamp(r.lo, r.hi)
        };
        let epsilon = log_uniform(self.epsilon, rng);
        let beta = log_uniform(self.beta, rng);
        let steps = rng.random_range(self.steps.lo..=self.steps.hi);
        SamplerParams { epsilon, steps, beta }
    }
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            epsilon: Self::default_epsilon(),
            beta: Self::default_beta(),
            steps: Self::default_steps(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub params: SamplerParams,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub status: TrialStatus,
    pub objective: Option<f64>,
    /// Failure message for failed trials.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub best: TrialRecord,
    pub trials: Vec<TrialRecord>,
}

/// Draws `budget` parameter tuples from `space` (in order, from one stream
/// seeded by `seed`) and scores each with an independent chain. Trials run
/// in parallel; numerical failures are recorded, not propagated.
pub fn random_search<E: EnergyFunction>(
    space: &SearchSpace,
    budget: usize,
    kind: SamplerKind,
    ef: &E,
    init_position: &[f64],
    eval: &BudgetSettings,
    seed: u64,
) -> Result<SearchResult> {
    if budget == 0 {
        return Err(Error::invalid("budget", "must be at least 1"));
    }
    space.validate()?;
    eval.validate()?;
    let mut rng = seeded(seed);
    let proposals: Vec<(usize, SamplerParams, u64)> = (0..budget)
        .map(|i| (i, space.sample(&mut rng), derive_seed(seed, &[i as u64])))
        .collect();
    let trials: Vec<TrialRecord> = proposals
        .into_par_iter()
        .map(|(index, params, trial_seed)| {
            match autocorr_for(kind, &params, ef, init_position, eval, trial_seed) {
                Ok(out) => TrialRecord {
                    index,
                    params,
                    sampler: kind,
                    seed: trial_seed,
                    status: TrialStatus::Ok,
                    objective: Some(tuning_objective(&out.fit)),
                    error: None,
                },
                Err(e) => TrialRecord {
                    index,
                    params,
                    sampler: kind,
                    seed: trial_seed,
                    status: TrialStatus::Failed,
                    objective: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let best = trials
        .iter()
        .filter(|t| t.status == TrialStatus::Ok)
        .min_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()))
        .cloned()
        .ok_or(Error::AllTrialsFailed(budget))?;
    Ok(SearchResult { best, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{EnergyFunction, RoughWell};

    fn quick() -> BudgetSettings {
        BudgetSettings {
            gradient_budget: 20_000,
            burn_in_evals: 0,
            n_lags: 40,
            max_lag_fraction: 0.1,
        }
    }

    #[test]
    fn space_validation_and_sampling() {
        let space = SearchSpace::default();
        space.validate().unwrap();
        let mut rng = seeded(1);
        for _ in 0..1000 {
            let p = space.sample(&mut rng);
            assert!((0.05..=5.0).contains(&p.epsilon));
            assert!((0.005..=0.9).contains(&p.beta));
            assert!((2..=50).contains(&p.steps));
        }
        let bad = SearchSpace { beta: Range { lo: 0.5, hi: 1.5 }, ..space };
        assert!(bad.validate().is_err());
        let point = SearchSpace::point(SamplerParams::ROUGH_WELL_HMC);
        assert_eq!(point.sample(&mut rng), SamplerParams::ROUGH_WELL_HMC);
    }

    #[test]
    fn single_trial_is_best() {
        let ef = RoughWell::default();
        let out = random_search(&SearchSpace::default(), 1, SamplerKind::Mjhmc, &ef, &[0.0, 0.0], &quick(), 4).unwrap();
        assert_eq!(out.trials.len(), 1);
        assert_eq!(out.best, out.trials[0]);
    }

    #[test]
    fn collapsed_space_and_determinism() {
        let ef = RoughWell::default();
        let space = SearchSpace::point(SamplerParams::ROUGH_WELL_HMC);
        let a = random_search(&space, 3, SamplerKind::Hmc, &ef, &[0.0, 0.0], &quick(), 5).unwrap();
        assert_eq!(a.best.params, SamplerParams::ROUGH_WELL_HMC);
        let b = random_search(&space, 3, SamplerKind::Hmc, &ef, &[0.0, 0.0], &quick(), 5).unwrap();
        assert_eq!(a, b);
        let min = a.trials.iter().filter_map(|t| t.objective).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best.objective, Some(min));
    }

    struct Broken;
    impl EnergyFunction for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn energy(&self, _: &[f64]) -> Result<f64> {
            Ok(f64::NAN)
        }
        fn gradient(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0])
        }
    }

    #[test]
    fn failures_are_recorded() {
        let err = random_search(&SearchSpace::default(), 2, SamplerKind::Hmc, &Broken, &[0.0], &quick(), 1).unwrap_err();
        assert!(matches!(err, Error::AllTrialsFailed(2)));
        assert!(random_search(&SearchSpace::default(), 0, SamplerKind::Hmc, &Broken, &[0.0], &quick(), 1).is_err());
    }
}
