//! Discrete-time HMC control.
//!
//! Each step proposes `Lz` and accepts with probability
//! `min(1, exp(-(H(Lz) - H(z))))`. A rejection flips the momentum. Afterwards
//! the momentum is fully redrawn with probability `beta`.

use crate::energy::EnergyFunction;
use crate::error::ChainAbort;
use crate::phase::{integrate, Evaluated, LeapfrogParams, PhaseState};
use crate::rng::{seeded, SimRng};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub epsilon: f64,
    pub steps: usize,
    /// Per-step probability of a full momentum redraw.
    pub beta: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl HmcConfig {
    pub fn new(epsilon: f64, steps: usize, beta: f64, n_samples: usize, seed: u64) -> Result<Self> {
        let config = HmcConfig {
            epsilon,
            steps,
            beta,
            n_samples,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.leapfrog()?;
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", "corruption probability must lie in (0, 1]"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        Ok(())
    }

    pub fn leapfrog(&self) -> Result<LeapfrogParams> {
        LeapfrogParams::new(self.epsilon, self.steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HmcSample {
    /// State after the step.
    pub state: PhaseState,
    pub accepted: bool,
    pub cumulative_gradient_evals: u64,
}

/// Result of one proposal.
#[derive(Clone, Debug, PartialEq)]
pub struct HmcStep {
    pub next: Evaluated,
    pub accepted: bool,
    pub gradient_evals: u64,
}

/// One HMC step from an evaluated state. Costs `steps` gradient evaluations.
pub fn hmc_step<E: EnergyFunction + ?Sized, R: Rng + ?Sized>(
    current: &Evaluated,
    config: &HmcConfig,
    ef: &E,
    rng: &mut R,
) -> Result<HmcStep> {
    let (proposal, gradient_evals) = integrate(current, &config.leapfrog()?, ef)?;
    let delta = proposal.hamiltonian() - current.hamiltonian();
    if !delta.is_finite() {
        return Err(Error::integration("non-finite energy change", &proposal.state));
    }
    let u: f64 = rng.random();
    let accepted = delta <= 0.0 || u < (-delta).exp();
    let mut next = if accepted {
        proposal
    } else {
        current.flipped()
    };
    if rng.random::<f64>() < config.beta {
        let v = (0..next.state.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        next = next.with_momentum(v);
    }
    Ok(HmcStep {
        next,
        accepted,
        gradient_evals,
    })
}

pub struct HmcChain<E> {
    ef: E,
    config: HmcConfig,
    rng: SimRng,
    current: Evaluated,
    gradient_evals: u64,
    accepted: usize,
    steps_taken: usize,
}

impl<E: EnergyFunction> HmcChain<E> {
    pub fn new(config: HmcConfig, ef: E, init: PhaseState) -> Result<Self> {
        config.validate()?;
        let current = Evaluated::new(init, &ef)?;
        Ok(HmcChain {
            ef,
            config,
            rng: seeded(config.seed),
            current,
            gradient_evals: 1,
            accepted: 0,
            steps_taken: 0,
        })
    }

    pub fn config(&self) -> &HmcConfig {
        &self.config
    }

    pub fn state(&self) -> &PhaseState {
        &self.current.state
    }

    pub fn gradient_evals(&self) -> u64 {
        self.gradient_evals
    }

    /// Fraction of accepted proposals so far; zero before the first step.
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps_taken == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps_taken as f64
        }
    }

    pub fn step(&mut self) -> Result<HmcSample> {
        let out = hmc_step(&self.current, &self.config, &self.ef, &mut self.rng)?;
        self.current = out.next;
        self.gradient_evals += out.gradient_evals;
        self.steps_taken += 1;
        self.accepted += out.accepted as usize;
        Ok(HmcSample {
            state: self.current.state.clone(),
            accepted: out.accepted,
            cumulative_gradient_evals: self.gradient_evals,
        })
    }
}

/// `config.n_samples` steps; each sample is the post-step state.
pub fn hmc_chain<E: EnergyFunction>(
    config: &HmcConfig,
    ef: E,
    init: PhaseState,
) -> Result<Vec<HmcSample>, ChainAbort<HmcSample>> {
    let mut chain = HmcChain::new(*config, ef, init).map_err(|error| ChainAbort {
        samples: Vec::new(),
        error,
    })?;
    let mut samples = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        match chain.step() {
            Ok(s) => samples.push(s),
            Err(error) => return Err(ChainAbort { samples, error }),
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Gaussian, RoughWell};

    struct Flat;
    impl EnergyFunction for Flat {
        fn dim(&self) -> usize {
            1
        }
        fn energy(&self, _: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
        fn gradient(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0])
        }
    }

    #[test]
    fn config_validation() {
        assert!(HmcConfig::new(0.1, 10, 0.0, 10, 0).is_err());
        assert!(HmcConfig::new(0.1, 10, 1.5, 10, 0).is_err());
        assert!(HmcConfig::new(0.1, 10, 1.0, 0, 0).is_err());
        assert!(HmcConfig::new(0.1, 10, 1.0, 10, 0).is_ok());
    }

    #[test]
    fn flat_energy_always_accepts_and_drifts() {
        let config = HmcConfig::new(0.5, 2, 1e-9, 50, 1).unwrap();
        let init = PhaseState::new(vec![0.0], vec![1.0]).unwrap();
        let out = hmc_chain(&config, Flat, init).unwrap();
        assert!(out.iter().all(|s| s.accepted));
        for (i, s) in out.iter().enumerate() {
            assert!((s.state.x[0] - (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn downhill_proposal_is_accepted() {
        let ef = Gaussian::isotropic(1).unwrap();
        let start = Evaluated::new(PhaseState::new(vec![2.0], vec![-2.5]).unwrap(), &ef).unwrap();
        let config = HmcConfig::new(0.3, 3, 0.5, 1, 0).unwrap();
        let (proposal, _) = integrate(&start, &config.leapfrog().unwrap(), &ef).unwrap();
        assert!(proposal.hamiltonian() < start.hamiltonian());
        for seed in 0..200 {
            let out = hmc_step(&start, &config, &ef, &mut seeded(seed)).unwrap();
            assert!(out.accepted);
            assert_eq!(out.next.state.x, proposal.state.x);
        }
    }

    #[test]
    fn single_step_chain_and_determinism() {
        let ef = RoughWell::default();
        let config = HmcConfig::new(0.591686, 25, 0.429956, 1, 3).unwrap();
        let init = PhaseState::new(vec![5.0, 5.0], vec![0.0, 1.0]).unwrap();
        let one = hmc_chain(&config, ef, init.clone()).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].cumulative_gradient_evals, 26);
        let config = HmcConfig { n_samples: 500, ..config };
        assert_eq!(
            hmc_chain(&config, ef, init.clone()).unwrap(),
            hmc_chain(&config, ef, init).unwrap()
        );
    }

    #[test]
    fn gradient_cost_matches_one_leapfrog_application() {
        let ef = RoughWell::default();
        let config = HmcConfig::new(0.5, 9, 0.3, 200, 4).unwrap();
        let init = PhaseState::new(vec![1.0, 1.0], vec![0.0, 1.0]).unwrap();
        let out = hmc_chain(&config, ef, init).unwrap();
        for pair in out.windows(2) {
            assert_eq!(pair[1].cumulative_gradient_evals - pair[0].cumulative_gradient_evals, 9);
        }
    }

    #[test]
    fn rough_well_control_settings_accept_sometimes() {
        let ef = RoughWell::default();
        let config = HmcConfig::new(0.591686, 25, 0.429956, 4_000, 5).unwrap();
        let init = PhaseState::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let mut chain = HmcChain::new(config, &ef, init).unwrap();
        for _ in 0..config.n_samples {
            chain.step().unwrap();
        }
        let rate = chain.acceptance_rate();
        assert!(rate > 0.0 && rate < 1.0, "{rate}");
    }

    #[test]
    fn gaussian_variance() {
        let ef = Gaussian::isotropic(1).unwrap();
        for (eps, m, beta) in [(0.1, 10, 0.5), (0.3, 5, 1.0), (0.5, 3, 0.2)] {
            let config = HmcConfig::new(eps, m, beta, 100_000, 9).unwrap();
            let init = PhaseState::new(vec![0.0], vec![1.0]).unwrap();
            let out = hmc_chain(&config, &ef, init).unwrap();
            let n = out.len() as f64;
            let mean = out.iter().map(|s| s.state.x[0]).sum::<f64>() / n;
            let var = out.iter().map(|s| (s.state.x[0] - mean).powi(2)).sum::<f64>() / n;
            assert!((var - 1.0).abs() < 0.05, "{eps} {m} {beta}: {var}");
        }
    }
}
