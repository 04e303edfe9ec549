//! Markov jump Hamiltonian Monte Carlo.
//!
//! Hamiltonian Monte Carlo recast as a continuous-time Markov jump process.
//! From every phase state the sampler races three Poisson clocks: a leapfrog
//! jump `L`, a momentum flip `F` and a momentum randomization `R`. Transition
//! rates may exceed one, and the holding time spent in each state becomes its
//! importance weight.
//!
//! Besides the jump sampler the crate ships
//!
//! - [`hmc`]: a discrete-time HMC control with flip-on-reject,
//! - [`ladder`]: exact spectral analysis of both samplers on finite ring
//!   state ladders,
//! - [`diagnostics`]: autocorrelation against gradient evaluations and a
//!   complex-exponential decay fit,
//! - [`tuner`]: random hyperparameter search on the decay-rate objective,
//! - [`cli`]: the `mjhmc` command-line driver.
//!
//! ```
//! use mjhmc::energy::Gaussian;
//! use mjhmc::phase::PhaseState;
//! use mjhmc::sampler::{sample_chain, weighted_moments, SamplerConfig};
//!
//! let target = Gaussian::isotropic(2).unwrap();
//! let config = SamplerConfig::new(0.3, 5, 0.5, 2_000, 7).unwrap();
//! let init = PhaseState::new(vec![0.0, 0.0], vec![0.5, -0.5]).unwrap();
//! let samples = sample_chain(&config, &target, init).unwrap();
//! let moments = weighted_moments(&samples).unwrap();
//! assert_eq!(moments.mean.len(), 2);
//! ```

pub mod checks;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod harness;
pub mod hmc;
pub mod ladder;
pub mod output;
pub mod phase;
pub mod rng;
pub mod sampler;
pub mod tuner;

pub use error::{Error, Result};

/// Crate version stamped into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
