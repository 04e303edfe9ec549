//! Phase-space states and the three HMC operators: leapfrog `L`, momentum
//! flip `F` and momentum randomization `R`.

use crate::energy::{kinetic_energy, EnergyFunction};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Joint position/momentum point `{x, v}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::invalid("state", "dimension must be positive"));
        }
        let state = PhaseState { x, v };
        if !state.is_finite() {
            return Err(Error::invalid("state", "components must be finite"));
        }
        Ok(state)
    }

    /// Position `x` with momentum drawn from the standard normal.
    pub fn with_random_momentum<R: Rng + ?Sized>(x: Vec<f64>, rng: &mut R) -> Result<Self> {
        let v = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
        PhaseState::new(x, v)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }

    /// Euclidean norm of the concatenated `(x, v)` vector.
    pub fn norm(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.v)
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance in phase space.
    pub fn distance(&self, other: &PhaseState) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Step size and number of leapfrog steps making up one `L` application.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeapfrogParams {
    pub epsilon: f64,
    pub steps: usize,
}

impl LeapfrogParams {
    pub fn new(epsilon: f64, steps: usize) -> Result<Self> {
        let params = LeapfrogParams { epsilon, steps };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be positive and finite"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// A phase state together with its potential energy and the gradient at its
/// position, so the next trajectory can start without re-evaluating it.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated {
    pub state: PhaseState,
    pub potential: f64,
    pub gradient: Vec<f64>,
}

impl Evaluated {
    /// Evaluates energy and gradient at `state`. Costs one gradient
    /// evaluation.
    pub fn new<E: EnergyFunction + ?Sized>(state: PhaseState, ef: &E) -> Result<Self> {
        if state.dim() != ef.dim() {
            return Err(Error::DimensionMismatch {
                expected: ef.dim(),
                got: state.dim(),
            });
        }
        let potential = ef.energy(&state.x)?;
        let gradient = ef.gradient(&state.x)?;
        if !potential.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::integration("non-finite energy or gradient", &state));
        }
        Ok(Evaluated {
            state,
            potential,
            gradient,
        })
    }

    pub fn hamiltonian(&self) -> f64 {
        self.potential + kinetic_energy(&self.state.v)
    }

    /// Momentum flip. Position, potential and gradient are unchanged.
    pub fn flipped(&self) -> Evaluated {
        Evaluated {
            state: flip(&self.state),
            potential: self.potential,
            gradient: self.gradient.clone(),
        }
    }

    /// Same position with a different momentum.
    pub fn with_momentum(&self, v: Vec<f64>) -> Evaluated {
        Evaluated {
            state: PhaseState {
                x: self.state.x.clone(),
                v,
            },
            potential: self.potential,
            gradient: self.gradient.clone(),
        }
    }
}

/// Applies `L` starting from an already evaluated state. Returns the end
/// point and the number of gradient evaluations spent (exactly `steps`).
pub fn integrate<E: EnergyFunction + ?Sized>(
    start: &Evaluated,
    params: &LeapfrogParams,
    ef: &E,
) -> Result<(Evaluated, u64)> {
    params.validate()?;
    let eps = params.epsilon;
    let mut x = start.state.x.clone();
    let mut v = start.state.v.clone();
    let mut grad = start.gradient.clone();
    for _ in 0..params.steps {
        for (vi, gi) in v.iter_mut().zip(&grad) {
            *vi -= 0.5 * eps * gi;
        }
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi += eps * vi;
        }
        grad = ef.gradient(&x)?;
        for (vi, gi) in v.iter_mut().zip(&grad) {
            *vi -= 0.5 * eps * gi;
        }
        if grad.iter().chain(&x).chain(&v).any(|c| !c.is_finite()) {
            return Err(Error::integration(
                "non-finite value during leapfrog",
                &PhaseState { x, v },
            ));
        }
    }
    let potential = ef.energy(&x)?;
    let state = PhaseState { x, v };
    if !potential.is_finite() {
        return Err(Error::integration("non-finite energy after leapfrog", &state));
    }
    Ok((
        Evaluated {
            state,
            potential,
            gradient: grad,
        },
        params.steps as u64,
    ))
}

/// `L^{-1} = F L F`, applied to an evaluated state.
pub fn integrate_inverse<E: EnergyFunction + ?Sized>(
    start: &Evaluated,
    params: &LeapfrogParams,
    ef: &E,
) -> Result<(Evaluated, u64)> {
    let (end, evals) = integrate(&start.flipped(), params, ef)?;
    Ok((end.flipped(), evals))
}

/// `M` half-kick / drift / half-kick leapfrog steps.
pub fn leapfrog<E: EnergyFunction + ?Sized>(
    state: &PhaseState,
    params: &LeapfrogParams,
    ef: &E,
) -> Result<PhaseState> {
    let start = Evaluated::new(state.clone(), ef)?;
    Ok(integrate(&start, params, ef)?.0.state)
}

pub fn leapfrog_inverse<E: EnergyFunction + ?Sized>(
    state: &PhaseState,
    params: &LeapfrogParams,
    ef: &E,
) -> Result<PhaseState> {
    Ok(flip(&leapfrog(&flip(state), params, ef)?))
}

pub fn flip(state: &PhaseState) -> PhaseState {
    PhaseState {
        x: state.x.clone(),
        v: state.v.iter().map(|v| -v).collect(),
    }
}

/// Replaces the momentum with a fresh standard-normal draw.
pub fn randomize_momentum<R: Rng + ?Sized>(state: &PhaseState, rng: &mut R) -> PhaseState {
    PhaseState {
        x: state.x.clone(),
        v: (0..state.dim()).map(|_| rng.sample(StandardNormal)).collect(),
    }
}
