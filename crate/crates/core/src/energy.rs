//! Target distributions, given as energy functions `E(x) = -log pi(x) + const`.

use crate::phase::PhaseState;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// A differentiable energy over `R^dim`.
///
/// Implementations are pure; samplers own any caching.
pub trait EnergyFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn energy(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<T: EnergyFunction + ?Sized> EnergyFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, x: &[f64]) -> Result<f64> {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(x)
    }
}

impl<T: EnergyFunction + ?Sized> EnergyFunction for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, x: &[f64]) -> Result<f64> {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(x)
    }
}

impl<T: EnergyFunction + ?Sized> EnergyFunction for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, x: &[f64]) -> Result<f64> {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(x)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Parameters of the two dimensional rough well: a wide quadratic bowl of
/// width `sigma1` with cosine ripples of period `2 * sigma2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughWellParams {
    #[serde(default = "RoughWellParams::default_sigma1")]
    pub sigma1: f64,
    #[serde(default = "RoughWellParams::default_sigma2")]
    pub sigma2: f64,
}

impl RoughWellParams {
    fn default_sigma1() -> f64 {
        100.0
    }
    fn default_sigma2() -> f64 {
        4.0
    }

    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        let params = RoughWellParams { sigma1, sigma2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma1.is_finite()) {
            return Err(Error::invalid("sigma1", "must be positive and finite"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "must be positive and finite"));
        }
        Ok(())
    }
}

impl Default for RoughWellParams {
    fn default() -> Self {
        RoughWellParams {
            sigma1: 100.0,
            sigma2: 4.0,
        }
    }
}

pub fn rough_well_energy(x: &[f64], params: &RoughWellParams) -> Result<f64> {
    check_dim(2, x.len())?;
    let quad = (x[0] * x[0] + x[1] * x[1]) / (2.0 * params.sigma1 * params.sigma1);
    let ripple = (PI * x[0] / params.sigma2).cos() + (PI * x[1] / params.sigma2).cos();
    Ok(quad + ripple)
}

pub fn rough_well_gradient(x: &[f64], params: &RoughWellParams) -> Result<Vec<f64>> {
    check_dim(2, x.len())?;
    let s1sq = params.sigma1 * params.sigma1;
    let k = PI / params.sigma2;
    Ok(x.iter().map(|&xi| xi / s1sq - k * (k * xi).sin()).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RoughWell {
    pub params: RoughWellParams,
}

impl RoughWell {
    pub fn new(params: RoughWellParams) -> Result<Self> {
        params.validate()?;
        Ok(RoughWell { params })
    }
}

impl EnergyFunction for RoughWell {
    fn dim(&self) -> usize {
        2
    }
    fn energy(&self, x: &[f64]) -> Result<f64> {
        rough_well_energy(x, &self.params)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        rough_well_gradient(x, &self.params)
    }
}

/// Zero-mean Gaussian with diagonal precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub precision_diag: Vec<f64>,
}

impl GaussianParams {
    pub fn validate(&self) -> Result<()> {
        if self.precision_diag.is_empty() {
            return Err(Error::invalid("precision_diag", "dimension must be positive"));
        }
        if self
            .precision_diag
            .iter()
            .any(|&p| !(p > 0.0 && p.is_finite()))
        {
            return Err(Error::invalid(
                "precision_diag",
                "all precisions must be positive and finite",
            ));
        }
        Ok(())
    }
}

pub fn gaussian_energy(x: &[f64], params: &GaussianParams) -> Result<f64> {
    check_dim(params.precision_diag.len(), x.len())?;
    Ok(0.5
        * x.iter()
            .zip(&params.precision_diag)
            .map(|(xi, p)| p * xi * xi)
            .sum::<f64>())
}

pub fn gaussian_gradient(x: &[f64], params: &GaussianParams) -> Result<Vec<f64>> {
    check_dim(params.precision_diag.len(), x.len())?;
    Ok(x.iter()
        .zip(&params.precision_diag)
        .map(|(xi, p)| p * xi)
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    pub params: GaussianParams,
}

impl Gaussian {
    pub fn new(precision_diag: Vec<f64>) -> Result<Self> {
        let params = GaussianParams { precision_diag };
        params.validate()?;
        Ok(Gaussian { params })
    }

    /// Standard normal in `dim` dimensions.
    pub fn isotropic(dim: usize) -> Result<Self> {
        Gaussian::new(vec![1.0; dim])
    }
}

impl EnergyFunction for Gaussian {
    fn dim(&self) -> usize {
        self.params.precision_diag.len()
    }
    fn energy(&self, x: &[f64]) -> Result<f64> {
        gaussian_energy(x, &self.params)
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        gaussian_gradient(x, &self.params)
    }
}

/// Kinetic energy of a unit-mass Gaussian momentum.
pub fn kinetic_energy(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|vi| vi * vi).sum::<f64>()
}

/// Hamiltonian `H = E(x) + |v|^2 / 2`.
pub fn joint_energy<E: EnergyFunction + ?Sized>(state: &PhaseState, ef: &E) -> Result<f64> {
    check_dim(ef.dim(), state.dim())?;
    Ok(ef.energy(&state.x)? + kinetic_energy(&state.v))
}

/// Target selection as it appears in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    RoughWell {
        #[serde(default = "RoughWellParams::default_sigma1")]
        sigma1: f64,
        #[serde(default = "RoughWellParams::default_sigma2")]
        sigma2: f64,
    },
    Gaussian {
        precision_diag: Vec<f64>,
    },
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::RoughWell {
            sigma1: 100.0,
            sigma2: 4.0,
        }
    }
}

impl TargetSpec {
    pub fn build(&self) -> Result<Arc<dyn EnergyFunction>> {
        Ok(match self {
            TargetSpec::RoughWell { sigma1, sigma2 } => {
                Arc::new(RoughWell::new(RoughWellParams::new(*sigma1, *sigma2)?)?)
            }
            TargetSpec::Gaussian { precision_diag } => {
                Arc::new(Gaussian::new(precision_diag.clone())?)
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::RoughWell { .. } => 2,
            TargetSpec::Gaussian { precision_diag } => precision_diag.len(),
        }
    }
}
