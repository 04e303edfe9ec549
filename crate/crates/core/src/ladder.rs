//! Finite ring state ladders.
//!
//! A ladder with `k` rungs has `2k` discrete states: each rung has an
//! ascending side, on which `L` moves up one rung, and a descending side, on
//! which `L` moves down. `F` crosses the rung. Both sides of a rung share one
//! total energy. The top rung wraps to the bottom, so `L^k` is the
//! identity.
//!
//! Matrices use the column convention: entry `(i, j)` describes the move
//! `j -> i`. Rate matrices have columns summing to zero; stochastic matrices
//! have columns summing to one.

use crate::rng::derived;
use crate::sampler::TransitionRates;
use crate::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector, Schur};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const STOCHASTIC_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Ladder {
    energies: Vec<f64>,
}

impl Ladder {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 3 {
            return Err(Error::invalid("k", "a ring ladder needs at least 3 rungs"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("energies", "must be finite"));
        }
        Ok(Ladder { energies })
    }

    /// Rung energies drawn i.i.d. from the standard normal.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Self> {
        Ladder::new((0..k).map(|_| rng.sample(StandardNormal)).collect())
    }

    pub fn rungs(&self) -> usize {
        self.energies.len()
    }

    pub fn n_states(&self) -> usize {
        2 * self.rungs()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, state: LadderState) -> f64 {
        self.energies[state.rung]
    }

    /// Unnormalized target `exp(-E)` per state, scaled so the largest entry
    /// is one.
    pub fn target(&self) -> DVector<f64> {
        let min = self.energies.iter().cloned().fold(f64::INFINITY, f64::min);
        DVector::from_fn(self.n_states(), |i, _| {
            let s = LadderState::from_index(i, self.rungs());
            (-(self.energy(s) - min)).exp()
        })
    }

    pub fn states(&self) -> impl Iterator<Item = LadderState> + '_ {
        (0..self.n_states()).map(move |i| LadderState::from_index(i, self.rungs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Ascending,
    Descending,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LadderState {
    pub rung: usize,
    pub side: Side,
}

impl LadderState {
    pub fn index(&self, k: usize) -> usize {
        match self.side {
            Side::Ascending => self.rung,
            Side::Descending => k + self.rung,
        }
    }

    pub fn from_index(i: usize, k: usize) -> Self {
        if i < k {
            LadderState {
                rung: i,
                side: Side::Ascending,
            }
        } else {
            LadderState {
                rung: i - k,
                side: Side::Descending,
            }
        }
    }

    pub fn leap(&self, k: usize) -> Self {
        let rung = match self.side {
            Side::Ascending => (self.rung + 1) % k,
            Side::Descending => (self.rung + k - 1) % k,
        };
        LadderState { rung, ..*self }
    }

    pub fn leap_inverse(&self, k: usize) -> Self {
        self.flip().leap(k).flip()
    }

    pub fn flip(&self) -> Self {
        let side = match self.side {
            Side::Ascending => Side::Descending,
            Side::Descending => Side::Ascending,
        };
        LadderState { side, ..*self }
    }
}

/// Continuous-time generator over ladder states.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix(DMatrix<f64>);

impl RateMatrix {
    /// Builds from off-diagonal rates; the diagonal is set to close every
    /// column to zero.
    pub fn from_off_diagonal(mut m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("rates", "matrix must be square"));
        }
        let n = m.nrows();
        for j in 0..n {
            m[(j, j)] = 0.0;
            let mut out = 0.0;
            for i in 0..n {
                if m[(i, j)] < 0.0 || !m[(i, j)].is_finite() {
                    return Err(Error::invalid("rates", "off-diagonal rates must be finite and nonnegative"));
                }
                out += m[(i, j)];
            }
            m[(j, j)] = -out;
        }
        Ok(RateMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_states(&self) -> usize {
        self.0.nrows()
    }

    /// Rate of `from -> to`.
    pub fn rate(&self, to: usize, from: usize) -> f64 {
        self.0[(to, from)]
    }

    /// Total outgoing rate of `state`.
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.0[(state, state)]
    }

    /// Copy with one off-diagonal rate replaced; the diagonal is re-closed.
    pub fn with_rate(&self, to: usize, from: usize, value: f64) -> Result<Self> {
        if to == from {
            return Err(Error::invalid("rates", "diagonal entries are implied"));
        }
        let mut m = self.0.clone();
        m[(to, from)] = value;
        RateMatrix::from_off_diagonal(m)
    }

    /// Largest absolute column sum.
    pub fn column_sum_residual(&self) -> f64 {
        self.0.column_iter().map(|c| c.sum().abs()).fold(0.0, f64::max)
    }
}

/// Discrete-time transition matrix with columns summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotStochastic("matrix is not square".into()));
        }
        if let Some(bad) = m.iter().find(|&&p| !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&p)) {
            return Err(Error::NotStochastic(format!("entry {bad} outside [0, 1]")));
        }
        for (j, col) in m.column_iter().enumerate() {
            let sum = col.sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic(format!("column {j} sums to {sum}")));
            }
        }
        Ok(StochasticMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_states(&self) -> usize {
        self.0.nrows()
    }

    /// `holding * I + (1 - holding) * self`. Removes periodicity without
    /// changing the stationary distribution.
    pub fn lazy(&self, holding: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&holding) {
            return Err(Error::invalid("holding", "must lie in [0, 1)"));
        }
        let n = self.n_states();
        StochasticMatrix::new(&self.0 * (1.0 - holding) + DMatrix::identity(n, n) * holding)
    }

    pub fn column_sum_residual(&self) -> f64 {
        self.0
            .column_iter()
            .map(|c| (c.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Jump-process generator of the MJHMC rates on `ladder`. Momentum
/// randomization leaves the ladder and is not represented.
pub fn build_mjhmc_rate_matrix(ladder: &Ladder) -> Result<RateMatrix> {
    let k = ladder.rungs();
    let n = ladder.n_states();
    let mut m = DMatrix::zeros(n, n);
    for s in ladder.states() {
        let j = s.index(k);
        let rates = TransitionRates::from_energies(
            ladder.energy(s),
            ladder.energy(s.leap(k)),
            ladder.energy(s.leap_inverse(k)),
            1.0,
        )
        .ok_or_else(|| Error::invalid("energies", "rate overflow on ladder"))?;
        m[(s.leap(k).index(k), j)] += rates.gamma_l;
        m[(s.flip().index(k), j)] += rates.gamma_f;
    }
    RateMatrix::from_off_diagonal(m)
}

/// Discrete-time HMC restricted to `ladder`: move to `Lz` with probability
/// `min(1, exp(-dE))`, otherwise flip.
pub fn build_hmc_ladder_chain(ladder: &Ladder) -> Result<StochasticMatrix> {
    let k = ladder.rungs();
    let n = ladder.n_states();
    let mut m = DMatrix::zeros(n, n);
    for s in ladder.states() {
        let j = s.index(k);
        let delta = ladder.energy(s.leap(k)) - ladder.energy(s);
        let accept = (-delta).exp().min(1.0);
        m[(s.leap(k).index(k), j)] += accept;
        m[(s.flip().index(k), j)] += 1.0 - accept;
    }
    StochasticMatrix::new(m)
}

/// Jump chain of the process, ignoring holding times:
/// `T_ij = G_ij / sum_{m != j} G_mj`, zero diagonal.
pub fn embedded_chain(rates: &RateMatrix) -> Result<StochasticMatrix> {
    let n = rates.n_states();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let out = rates.exit_rate(j);
        if !(out > 0.0) {
            return Err(Error::DegenerateLadder { state: j });
        }
        for i in (0..n).filter(|&i| i != j) {
            m[(i, j)] = rates.rate(i, j) / out;
        }
    }
    StochasticMatrix::new(m)
}

/// Expected holding time of each state, `1 / sum_{i != j} G_ij`.
pub fn holding_time_diag(rates: &RateMatrix) -> Result<DVector<f64>> {
    let n = rates.n_states();
    let mut d = DVector::zeros(n);
    for j in 0..n {
        let out = rates.exit_rate(j);
        if !(out > 0.0) {
            return Err(Error::DegenerateLadder { state: j });
        }
        d[j] = 1.0 / out;
    }
    Ok(d)
}

/// All eigenvalues of a dense general matrix.
///
/// nalgebra's Schur iteration is tried first. Its QR sweep has no
/// exceptional shifts and stalls on some ladder chains, whose spectra come
/// in `±λ` pairs; those go to faer's solver instead.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if let Some(schur) = Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(1)) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let dense = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let values = dense.eigenvalues().map_err(|_| Error::EigenFailure(n))?;
    Ok(values.into_iter().map(|z| Complex::new(z.re, z.im)).collect())
}

/// `|l1| - |l2|` for the two eigenvalues of largest magnitude.
pub fn gap_from_eigenvalues(values: &[Complex<f64>]) -> f64 {
    let mut mags: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    match mags.as_slice() {
        [] => 0.0,
        [only] => *only,
        [first, second, ..] => (first - second).max(0.0),
    }
}

pub fn spectral_gap(chain: &StochasticMatrix) -> Result<f64> {
    Ok(gap_from_eigenvalues(&eigenvalues(chain.matrix())?))
}

/// Spectra of the jump chain `T` and of `D T D^-1`, in solver order.
pub fn similarity_check(rates: &RateMatrix) -> Result<(Vec<Complex<f64>>, Vec<Complex<f64>>)> {
    let jump = embedded_chain(rates)?;
    let d = holding_time_diag(rates)?;
    let n = rates.n_states();
    let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * jump.matrix()[(i, j)] / d[j]);
    Ok((eigenvalues(jump.matrix())?, eigenvalues(&scaled)?))
}

/// Distance between two spectra treated as multisets: greedy nearest
/// matching, worst matched distance. Infinite when lengths differ.
pub fn spectrum_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for za in a {
        let (best, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, zb)| (i, (za - zb).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("lengths match");
        used[best] = true;
        worst = worst.max(dist);
    }
    worst
}

/// `max_i |sum_j G_ij pi_j| / max_j pi_j` with `pi ∝ exp(-E)`. Zero (up to
/// rounding) exactly when `pi` is a fixed point of the generator.
pub fn balance_check(rates: &RateMatrix, ladder: &Ladder) -> f64 {
    let pi = ladder.target();
    let flow = rates.matrix() * &pi;
    flow.amax() / pi.amax()
}

/// Residual of `T pi_hat = pi_hat` for the jump chain, where
/// `pi_hat_j ∝ pi_j / D_jj`.
pub fn embedded_fixed_point_check(rates: &RateMatrix, ladder: &Ladder) -> Result<f64> {
    let jump = embedded_chain(rates)?;
    let d = holding_time_diag(rates)?;
    let pi = ladder.target();
    let pi_hat = pi.component_div(&d);
    let pi_hat = &pi_hat / pi_hat.sum();
    let residual = jump.matrix() * &pi_hat - &pi_hat;
    Ok(residual.amax() / pi_hat.amax())
}

/// Probability that each independent exponential clock fires first:
/// `rate_j / sum(rates)`.
pub fn competing_exponential_probabilities(rates: &[f64]) -> Vec<f64> {
    let total: f64 = rates.iter().sum();
    rates.iter().map(|r| r / total).collect()
}

/// Product of pairwise win probabilities, `prod_{k != j} r_j / (r_j + r_k)`.
/// Agrees with [`competing_exponential_probabilities`] only for two clocks.
pub fn pairwise_product_probabilities(rates: &[f64]) -> Vec<f64> {
    rates
        .iter()
        .enumerate()
        .map(|(j, rj)| {
            rates
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, rk)| rj / (rj + rk))
                .product()
        })
        .collect()
}

/// Win frequencies of `n_trials` simulated races between independent
/// exponential clocks.
pub fn min_exponential_oracle<R: Rng + ?Sized>(rates: &[f64], n_trials: usize, rng: &mut R) -> Vec<f64> {
    let mut wins = vec![0usize; rates.len()];
    for _ in 0..n_trials {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, &r) in rates.iter().enumerate() {
            let t = rng.sample::<f64, _>(Exp1) / r;
            if t < best.1 {
                best = (i, t);
            }
        }
        if best.0 != usize::MAX {
            wins[best.0] += 1;
        }
    }
    wins.into_iter()
        .map(|w| w as f64 / n_trials as f64)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderSampler {
    Mjhmc,
    Hmc,
}

impl LadderSampler {
    pub fn name(&self) -> &'static str {
        match self {
            LadderSampler::Mjhmc => "mjhmc",
            LadderSampler::Hmc => "hmc",
        }
    }
}

/// Both chains on one ladder: the MJHMC jump chain and the HMC control.
pub fn ladder_chains(ladder: &Ladder) -> Result<(StochasticMatrix, StochasticMatrix)> {
    let rates = build_mjhmc_rate_matrix(ladder)?;
    Ok((embedded_chain(&rates)?, build_hmc_ladder_chain(ladder)?))
}

/// True when no state has a positive flip rate, so the ladder splits into
/// two disconnected `L` cycles.
pub fn is_degenerate(rates: &RateMatrix, k: usize) -> bool {
    (0..2 * k).all(|j| {
        let s = LadderState::from_index(j, k);
        rates.rate(s.flip().index(k), j) == 0.0
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderExperiment {
    #[serde(default = "LadderExperiment::default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "LadderExperiment::default_draws")]
    pub draws_per_size: usize,
    /// Self-transition probability mixed into both chains before taking the
    /// gap. On a ring with an even number of rungs both chains alternate
    /// between two classes of states, which pins an eigenvalue at -1 and the
    /// raw gap at zero.
    #[serde(default = "LadderExperiment::default_holding")]
    pub holding: f64,
}

impl LadderExperiment {
    fn default_sizes() -> Vec<usize> {
        vec![4, 8, 16, 32, 64, 128, 200]
    }
    fn default_draws() -> usize {
        250
    }
    fn default_holding() -> f64 {
        0.5
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::invalid("sizes", "need at least one ladder size"));
        }
        if self.sizes.iter().any(|&k| k < 3) {
            return Err(Error::invalid("sizes", "ladder sizes must be at least 3"));
        }
        if self.draws_per_size == 0 {
            return Err(Error::invalid("draws_per_size", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.holding) {
            return Err(Error::invalid("holding", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

impl Default for LadderExperiment {
    fn default() -> Self {
        LadderExperiment {
            sizes: Self::default_sizes(),
            draws_per_size: Self::default_draws(),
            holding: Self::default_holding(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapSummary {
    pub k: usize,
    pub sampler: LadderSampler,
    pub mean_gap: f64,
    pub std_error: f64,
    pub draws: usize,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Spectral gaps of both samplers averaged over random standard-normal
/// ladders. Each (size, draw) task has its own seed derived from `seed`.
/// Rows come out ordered by size, MJHMC before HMC.
pub fn random_ladder_experiment(config: &LadderExperiment, seed: u64) -> Result<Vec<GapSummary>> {
    config.validate()?;
    let tasks: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(si, _)| (0..config.draws_per_size).map(move |d| (si, d)))
        .collect();
    let gaps: Vec<(f64, f64)> = tasks
        .par_iter()
        .map(|&(si, d)| {
            let k = config.sizes[si];
            let mut rng = derived(seed, &[k as u64, d as u64]);
            loop {
                let ladder = Ladder::random(k, &mut rng)?;
                let rates = build_mjhmc_rate_matrix(&ladder)?;
                if is_degenerate(&rates, k) {
                    continue;
                }
                let mj = embedded_chain(&rates)?.lazy(config.holding)?;
                let hmc = build_hmc_ladder_chain(&ladder)?.lazy(config.holding)?;
                return Ok((spectral_gap(&mj)?, spectral_gap(&hmc)?));
            }
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(2 * config.sizes.len());
    for (si, &k) in config.sizes.iter().enumerate() {
        let chunk = &gaps[si * config.draws_per_size..(si + 1) * config.draws_per_size];
        for sampler in [LadderSampler::Mjhmc, LadderSampler::Hmc] {
            let values: Vec<f64> = chunk
                .iter()
                .map(|g| if sampler == LadderSampler::Mjhmc { g.0 } else { g.1 })
                .collect();
            let (mean_gap, std_error) = mean_and_se(&values);
            rows.push(GapSummary {
                k,
                sampler,
                mean_gap,
                std_error,
                draws: config.draws_per_size,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use std::f64::consts::LN_2;

    fn flat(k: usize) -> Ladder {
        Ladder::new(vec![0.5; k]).unwrap()
    }

    #[test]
    fn ladder_validation_and_topology() {
        assert!(Ladder::new(vec![0.0, 1.0]).is_err());
        assert!(Ladder::new(vec![0.0, f64::NAN, 1.0]).is_err());
        let k = 5;
        for i in 0..2 * k {
            let s = LadderState::from_index(i, k);
            assert_eq!(s.index(k), i);
            assert_eq!(s.flip().flip(), s);
            assert_eq!(s.leap(k).leap_inverse(k), s);
            // F L F L = I
            assert_eq!(s.leap(k).flip().leap(k).flip(), s);
            let mut t = s;
            for _ in 0..k {
                t = t.leap(k);
            }
            assert_eq!(t, s);
        }
    }

    #[test]
    fn flat_ladder_rates() {
        let rates = build_mjhmc_rate_matrix(&flat(4)).unwrap();
        for s in flat(4).states() {
            let j = s.index(4);
            assert_eq!(rates.rate(s.leap(4).index(4), j), 1.0);
            assert_eq!(rates.rate(s.flip().index(4), j), 0.0);
        }
        assert!(is_degenerate(&rates, 4));
        let jump = embedded_chain(&rates).unwrap();
        // permutation matrix: one entry of 1 per column
        for col in jump.matrix().column_iter() {
            assert_eq!(col.iter().filter(|&&p| p == 1.0).count(), 1);
            assert_eq!(col.sum(), 1.0);
        }
        assert_eq!(holding_time_diag(&rates).unwrap(), DVector::from_element(8, 1.0));
    }

    #[test]
    fn three_rung_hand_case() {
        let ladder = Ladder::new(vec![0.0, 2.0 * LN_2, 0.0]).unwrap();
        let rates = build_mjhmc_rate_matrix(&ladder).unwrap();
        let s = LadderState { rung: 0, side: Side::Ascending };
        let up = rates.rate(s.leap(3).index(3), s.index(3));
        let across = rates.rate(s.flip().index(3), s.index(3));
        assert!((up - 0.5).abs() < 1e-15);
        assert!((across - 0.5).abs() < 1e-15);
        let d = holding_time_diag(&rates).unwrap();
        assert!((d[s.index(3)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generator_columns_close() {
        let mut rng = seeded(1);
        for k in [3, 7, 40] {
            let ladder = Ladder::random(k, &mut rng).unwrap();
            let rates = build_mjhmc_rate_matrix(&ladder).unwrap();
            assert!(rates.column_sum_residual() <= 1e-12);
            let hmc = build_hmc_ladder_chain(&ladder).unwrap();
            assert!(hmc.column_sum_residual() <= 1e-12);
            let jump = embedded_chain(&rates).unwrap();
            assert!(jump.column_sum_residual() <= 1e-12);
            assert!((0..2 * k).all(|i| jump.matrix()[(i, i)] == 0.0));
        }
    }

    #[test]
    fn hmc_ladder_chain_cases() {
        let chain = build_hmc_ladder_chain(&flat(5)).unwrap();
        for s in flat(5).states() {
            assert_eq!(chain.matrix()[(s.leap(5).index(5), s.index(5))], 1.0);
        }
        let ladder = Ladder::new(vec![0.0, LN_2, 5.0]).unwrap();
        let chain = build_hmc_ladder_chain(&ladder).unwrap();
        let s = LadderState { rung: 0, side: Side::Ascending };
        assert!((chain.matrix()[(s.leap(3).index(3), 0)] - 0.5).abs() < 1e-15);
        assert!((chain.matrix()[(s.flip().index(3), 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn embedded_chain_probabilities() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0]);
        let rates = RateMatrix::from_off_diagonal(m).unwrap();
        let jump = embedded_chain(&rates).unwrap();
        assert!((jump.matrix()[(1, 0)] - 0.25).abs() < 1e-15);
        assert!((jump.matrix()[(2, 0)] - 0.75).abs() < 1e-15);

        let m = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 1.0, 1.0,
            1.0, 0.0, 1.0, 1.0,
            2.0, 1.0, 0.0, 1.0,
            3.0, 1.0, 1.0, 0.0,
        ]);
        let jump = embedded_chain(&RateMatrix::from_off_diagonal(m).unwrap()).unwrap();
        let col: Vec<f64> = jump.matrix().column(0).iter().copied().collect();
        for (p, want) in col[1..].iter().zip([1.0 / 6.0, 1.0 / 3.0, 0.5]) {
            assert!((p - want).abs() < 1e-15);
        }

        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let rates = RateMatrix::from_off_diagonal(m).unwrap();
        assert!(matches!(embedded_chain(&rates), Err(Error::DegenerateLadder { state: 0 })));
        assert!(holding_time_diag(&rates).is_err());
    }

    #[test]
    fn two_state_gaps() {
        let swap = StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!(spectral_gap(&swap).unwrap().abs() < 1e-12);
        let mix = StochasticMatrix::new(DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert!((spectral_gap(&mix).unwrap() - 1.0).abs() < 1e-12);
        assert!(StochasticMatrix::new(DMatrix::from_element(2, 2, 0.6)).is_err());
        assert!(StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[1.5, 0.0, -0.5, 1.0])).is_err());
    }

    #[test]
    fn even_rings_are_periodic() {
        let mut rng = seeded(2);
        let ladder = Ladder::random(8, &mut rng).unwrap();
        let (mj, hmc) = ladder_chains(&ladder).unwrap();
        assert!(spectral_gap(&mj).unwrap() < 1e-9);
        assert!(spectral_gap(&hmc).unwrap() < 1e-9);
        assert!(spectral_gap(&mj.lazy(0.5).unwrap()).unwrap() > 1e-3);
    }

    #[test]
    fn lazy_maps_eigenvalues() {
        let mut rng = seeded(3);
        let (mj, _) = ladder_chains(&Ladder::random(9, &mut rng).unwrap()).unwrap();
        let raw = eigenvalues(mj.matrix()).unwrap();
        let lazy = eigenvalues(mj.lazy(0.3).unwrap().matrix()).unwrap();
        let mapped: Vec<_> = raw.iter().map(|z| z * 0.7 + 0.3).collect();
        assert!(spectrum_distance(&mapped, &lazy) < 1e-8);
        assert!(mj.lazy(1.0).is_err());
    }

    #[test]
    fn flat_ladder_similarity_is_trivial() {
        let rates = build_mjhmc_rate_matrix(&flat(6)).unwrap();
        let (a, b) = similarity_check(&rates).unwrap();
        assert!(spectrum_distance(&a, &b) < 1e-12);
        assert!(balance_check(&rates, &flat(6)) == 0.0);
    }

    #[test]
    fn balance_detects_fault_injection() {
        let mut rng = seeded(4);
        let ladder = Ladder::random(64, &mut rng).unwrap();
        let rates = build_mjhmc_rate_matrix(&ladder).unwrap();
        assert!(balance_check(&rates, &ladder) <= 1e-10);
        assert!(embedded_fixed_point_check(&rates, &ladder).unwrap() <= 1e-10);

        let pi = ladder.target();
        let j = pi.imax();
        let to = LadderState::from_index(j, 64).leap(64).index(64);
        let bumped = rates.with_rate(to, j, rates.rate(to, j) * (1.0 + 1e-3)).unwrap();
        assert!(balance_check(&bumped, &ladder) > 1e-4);
        assert!(embedded_fixed_point_check(&bumped, &ladder).unwrap() > 1e-6);
    }

    #[test]
    fn exponential_race_formulas() {
        assert_eq!(competing_exponential_probabilities(&[1.0, 3.0]), vec![0.25, 0.75]);
        assert_eq!(pairwise_product_probabilities(&[1.0, 3.0]), vec![0.25, 0.75]);
        let product = pairwise_product_probabilities(&[1.0, 2.0, 3.0]);
        for (p, want) in product.iter().zip([1.0 / 12.0, 4.0 / 15.0, 9.0 / 20.0]) {
            assert!((p - want).abs() < 1e-15);
        }
        let freq = min_exponential_oracle(&[1.0, 1.0], 100_000, &mut seeded(5));
        assert!((freq[0] - 0.5).abs() < 3.0 * (0.25_f64 / 1e5).sqrt());
    }

    #[test]
    fn experiment_is_reproducible() {
        let config = LadderExperiment {
            sizes: vec![5, 12],
            draws_per_size: 6,
            holding: 0.5,
        };
        let a = random_ladder_experiment(&config, 99).unwrap();
        let b = random_ladder_experiment(&config, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].sampler, LadderSampler::Mjhmc);
        assert_eq!(a[3].k, 12);
        let bad = LadderExperiment { sizes: vec![2], ..config };
        assert!(random_ladder_experiment(&bad, 1).is_err());
    }
}
