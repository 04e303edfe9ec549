//! The Markov jump HMC sampler.
//!
//! From a state `z` the process races three exponential clocks with rates
//!
//! ```text
//! gamma_L = exp(-(H(Lz) - H(z)) / 2)
//! gamma_F = max(0, exp(-(H(L^-1 z) - H(z)) / 2) - gamma_L)
//! gamma_R = beta
//! ```
//!
//! and jumps to whichever of `Lz`, `Fz`, `Rz` fires first. The time spent
//! waiting is the holding time of `z` and serves as its importance weight.
//!
//! [`StateCache`] keeps `z`, `Lz` and `L^-1 z` evaluated. After an `L` jump
//! the old state becomes the new `L^-1` neighbour. After an `F` jump both
//! neighbours are known already, because `L F z = F L^-1 z` and
//! `L^-1 F z = F L z`. Only `R` jumps pay for two fresh trajectories.

use crate::energy::EnergyFunction;
use crate::error::ChainAbort;
use crate::phase::{integrate, integrate_inverse, Evaluated, LeapfrogParams, PhaseState};
use crate::rng::{seeded, SimRng};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionKind {
    L,
    F,
    R,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::L => "L",
            TransitionKind::F => "F",
            TransitionKind::R => "R",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionRates {
    pub gamma_l: f64,
    pub gamma_f: f64,
    pub beta: f64,
}

impl TransitionRates {
    /// Rates from the Hamiltonians of `z`, `Lz` and `L^-1 z`. Working with
    /// energy differences keeps the square-rooted density ratios from
    /// overflowing.
    pub fn from_energies(current: f64, forward: f64, backward: f64, beta: f64) -> Option<Self> {
        let gamma_l = (-(forward - current) / 2.0).exp();
        let back = (-(backward - current) / 2.0).exp();
        let gamma_f = (back - gamma_l).max(0.0);
        let rates = TransitionRates {
            gamma_l,
            gamma_f,
            beta,
        };
        rates.is_valid().then_some(rates)
    }

    pub fn is_valid(&self) -> bool {
        self.gamma_l > 0.0
            && self.gamma_l.is_finite()
            && self.gamma_f >= 0.0
            && self.gamma_f.is_finite()
            && self.beta > 0.0
            && self.beta.is_finite()
    }

    pub fn total(&self) -> f64 {
        self.gamma_l + self.gamma_f + self.beta
    }
}

/// Waiting times of the three competing clocks. A zero rate never fires and
/// is represented by `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaitingTimes {
    pub l: f64,
    pub f: f64,
    pub r: f64,
}

impl WaitingTimes {
    /// Winner of the race. Exact ties go to `L`, then `F`.
    pub fn winner(&self) -> TransitionKind {
        if self.l <= self.f && self.l <= self.r {
            TransitionKind::L
        } else if self.f <= self.r {
            TransitionKind::F
        } else {
            TransitionKind::R
        }
    }

    pub fn holding_time(&self) -> f64 {
        self.l.min(self.f).min(self.r)
    }
}

fn exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let unit: f64 = rng.sample(Exp1);
    if rate > 0.0 {
        unit / rate
    } else {
        f64::INFINITY
    }
}

/// Draws all three clocks. Always consumes three variates from `rng`.
pub fn draw_waiting_times<R: Rng + ?Sized>(rates: &TransitionRates, rng: &mut R) -> WaitingTimes {
    let l = exponential(rates.gamma_l, rng);
    let f = exponential(rates.gamma_f, rng);
    let r = exponential(rates.beta, rng);
    WaitingTimes { l, f, r }
}

/// A visited state with the time the process spent there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedSample {
    pub state: PhaseState,
    pub holding_time: f64,
    pub transition_out: TransitionKind,
    /// Gradient evaluations spent up to and including the preparation of
    /// this state's neighbours.
    pub cumulative_gradient_evals: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub epsilon: f64,
    pub steps: usize,
    pub beta: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(epsilon: f64, steps: usize, beta: f64, n_samples: usize, seed: u64) -> Result<Self> {
        let config = SamplerConfig {
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
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "momentum randomization rate must be positive"));
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

/// `z`, `Lz` and `L^-1 z`, all evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct StateCache {
    pub current: Evaluated,
    pub forward: Evaluated,
    pub backward: Evaluated,
    /// Transition that produced `current`; `None` for the initial state.
    pub last: Option<TransitionKind>,
}

impl StateCache {
    /// Evaluates `init` and both of its neighbours. Returns the gradient
    /// evaluations spent (`2 M + 1`).
    pub fn new<E: EnergyFunction + ?Sized>(
        init: PhaseState,
        params: &LeapfrogParams,
        ef: &E,
    ) -> Result<(Self, u64)> {
        let current = Evaluated::new(init, ef)?;
        let (forward, fwd_evals) = integrate(&current, params, ef)?;
        let (backward, back_evals) = integrate_inverse(&current, params, ef)?;
        Ok((
            StateCache {
                current,
                forward,
                backward,
                last: None,
            },
            1 + fwd_evals + back_evals,
        ))
    }

    pub fn rates(&self, beta: f64) -> Result<TransitionRates> {
        TransitionRates::from_energies(
            self.current.hamiltonian(),
            self.forward.hamiltonian(),
            self.backward.hamiltonian(),
            beta,
        )
        .ok_or_else(|| Error::integration("non-finite transition rate", &self.current.state))
    }

    /// Cache for the state reached by `kind`. `new_momentum` is used for `R`
    /// and ignored otherwise.
    pub fn advance<E: EnergyFunction + ?Sized>(
        self,
        kind: TransitionKind,
        new_momentum: Option<Vec<f64>>,
        params: &LeapfrogParams,
        ef: &E,
    ) -> Result<(Self, u64)> {
        match kind {
            TransitionKind::L => {
                let (forward, evals) = integrate(&self.forward, params, ef)?;
                Ok((
                    StateCache {
                        backward: self.current,
                        current: self.forward,
                        forward,
                        last: Some(kind),
                    },
                    evals,
                ))
            }
            TransitionKind::F => Ok((
                StateCache {
                    current: self.current.flipped(),
                    forward: self.backward.flipped(),
                    backward: self.forward.flipped(),
                    last: Some(kind),
                },
                0,
            )),
            TransitionKind::R => {
                let v = new_momentum.ok_or(Error::invalid("momentum", "R transition needs a momentum draw"))?;
                if v.len() != self.current.state.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.current.state.dim(),
                        got: v.len(),
                    });
                }
                let current = self.current.with_momentum(v);
                let (forward, a) = integrate(&current, params, ef)?;
                let (backward, b) = integrate_inverse(&current, params, ef)?;
                Ok((
                    StateCache {
                        current,
                        forward,
                        backward,
                        last: Some(kind),
                    },
                    a + b,
                ))
            }
        }
    }
}

/// Outgoing rates of the cached state.
pub fn compute_rates(cache: &StateCache, config: &SamplerConfig) -> Result<TransitionRates> {
    cache.rates(config.beta)
}

/// One jump of the process. `gradient_evals` is the running total before the
/// jump; the returned sample carries it, and the returned count includes
/// the work spent preparing the next cache.
pub fn step<E: EnergyFunction + ?Sized, R: Rng + ?Sized>(
    cache: StateCache,
    config: &SamplerConfig,
    ef: &E,
    rng: &mut R,
    gradient_evals: u64,
) -> Result<(WeightedSample, StateCache, u64)> {
    let rates = compute_rates(&cache, config)?;
    let waits = draw_waiting_times(&rates, rng);
    let kind = waits.winner();
    let sample = WeightedSample {
        state: cache.current.state.clone(),
        holding_time: waits.holding_time(),
        transition_out: kind,
        cumulative_gradient_evals: gradient_evals,
    };
    let momentum = (kind == TransitionKind::R).then(|| {
        (0..cache.current.state.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect()
    });
    let (next, evals) = cache.advance(kind, momentum, &config.leapfrog()?, ef)?;
    Ok((sample, next, gradient_evals + evals))
}

/// A running jump chain.
pub struct MjhmcChain<E> {
    ef: E,
    config: SamplerConfig,
    leapfrog: LeapfrogParams,
    rng: SimRng,
    cache: Option<StateCache>,
    gradient_evals: u64,
}

impl<E: EnergyFunction> MjhmcChain<E> {
    pub fn new(config: SamplerConfig, ef: E, init: PhaseState) -> Result<Self> {
        config.validate()?;
        let leapfrog = config.leapfrog()?;
        let (cache, evals) = StateCache::new(init, &leapfrog, &ef)?;
        Ok(MjhmcChain {
            ef,
            config,
            leapfrog,
            rng: seeded(config.seed),
            cache: Some(cache),
            gradient_evals: evals,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn leapfrog_params(&self) -> &LeapfrogParams {
        &self.leapfrog
    }

    /// Current cache. `None` only after a failed step.
    pub fn cache(&self) -> Option<&StateCache> {
        self.cache.as_ref()
    }

    pub fn gradient_evals(&self) -> u64 {
        self.gradient_evals
    }

    pub fn step(&mut self) -> Result<WeightedSample> {
        let cache = self
            .cache
            .take()
            .ok_or(Error::invalid("chain", "stepped after an integration failure"))?;
        let (sample, next, evals) =
            step(cache, &self.config, &self.ef, &mut self.rng, self.gradient_evals)?;
        self.cache = Some(next);
        self.gradient_evals = evals;
        Ok(sample)
    }
}

/// Runs `config.n_samples` jumps from `init`. The first sample's state is
/// `init` itself.
pub fn sample_chain<E: EnergyFunction>(
    config: &SamplerConfig,
    ef: E,
    init: PhaseState,
) -> Result<Vec<WeightedSample>, ChainAbort<WeightedSample>> {
    let mut chain = MjhmcChain::new(*config, ef, init).map_err(|error| ChainAbort {
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

/// Systematic resampling: `n_out` evenly spaced points, with one random
/// offset, laid over the cumulative weights. Returned indices are
/// nondecreasing, so a time-ordered input stays time-ordered. For holding
/// time weights this is the trajectory observed on a regular time grid.
pub fn systematic_indices<R: Rng + ?Sized>(
    weights: &[f64],
    n_out: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::EmptyInput("resampling needs at least one sample"));
    }
    if n_out == 0 {
        return Err(Error::invalid("n_out", "must be at least 1"));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::invalid("weights", "must be positive and finite"));
    }
    let total: f64 = weights.iter().sum();
    let spacing = total / n_out as f64;
    let offset: f64 = rng.random::<f64>() * spacing;
    let mut out = Vec::with_capacity(n_out);
    let mut idx = 0;
    let mut cumulative = weights[0];
    for m in 0..n_out {
        let point = offset + m as f64 * spacing;
        while point >= cumulative && idx + 1 < weights.len() {
            idx += 1;
            cumulative += weights[idx];
        }
        out.push(idx);
    }
    Ok(out)
}

/// Resamples states using holding times as importance weights.
pub fn resample<R: Rng + ?Sized>(
    samples: &[WeightedSample],
    n_out: usize,
    rng: &mut R,
) -> Result<Vec<PhaseState>> {
    let weights: Vec<f64> = samples.iter().map(|s| s.holding_time).collect();
    Ok(systematic_indices(&weights, n_out, rng)?
        .into_iter()
        .map(|i| samples[i].state.clone())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedMoments {
    pub mean: Vec<f64>,
    /// Row-major `dim x dim`.
    pub covariance: Vec<Vec<f64>>,
}

/// Holding-time weighted mean and covariance of positions.
pub fn weighted_moments(samples: &[WeightedSample]) -> Result<WeightedMoments> {
    let first = samples
        .first()
        .ok_or(Error::EmptyInput("moments need at least one sample"))?;
    let dim = first.state.dim();
    let total: f64 = samples.iter().map(|s| s.holding_time).sum();
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(&s.state.x) {
            *m += s.holding_time * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut covariance = vec![vec![0.0; dim]; dim];
    for s in samples {
        for i in 0..dim {
            let di = s.state.x[i] - mean[i];
            for j in 0..dim {
                covariance[i][j] += s.holding_time * di * (s.state.x[j] - mean[j]);
            }
        }
    }
    covariance
        .iter_mut()
        .flatten()
        .for_each(|c| *c /= total);
    Ok(WeightedMoments { mean, covariance })
}
