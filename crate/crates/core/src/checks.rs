//! Invariant suite behind the `check` command.

use crate::config::CheckSection;
use crate::energy::RoughWell;
use crate::ladder::{
    balance_check, build_hmc_ladder_chain, build_mjhmc_rate_matrix, competing_exponential_probabilities,
    eigenvalues, embedded_chain, embedded_fixed_point_check, min_exponential_oracle, similarity_check,
    spectrum_distance, Ladder, LadderState, RateMatrix,
};
use crate::phase::{leapfrog, leapfrog_inverse, flip, Evaluated, LeapfrogParams, PhaseState};
use crate::rng::derived;
use crate::sampler::{draw_waiting_times, StateCache};
use crate::Result;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst value seen; compared against `tolerance`.
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} residual={:.3e} tolerance={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Scales the leapfrog rate out of the most probable state by
/// `1 + scale`. Any nonzero scale breaks stationarity.
pub fn inject_fault(rates: &RateMatrix, ladder: &Ladder, scale: f64) -> Result<RateMatrix> {
    let k = ladder.rungs();
    let j = ladder.target().imax();
    let to = LadderState::from_index(j, k).leap(k).index(k);
    rates.with_rate(to, j, rates.rate(to, j) * (1.0 + scale))
}

fn random_ladders(config: &CheckSection, seed: u64, stream: u64, count: usize) -> Result<Vec<Ladder>> {
    let mut rng = derived(seed, &[stream]);
    (0..count)
        .map(|_| {
            let k = rng.random_range(config.min_rungs..=config.max_rungs);
            Ladder::random(k, &mut rng)
        })
        .collect()
}

fn ladder_checks(config: &CheckSection, seed: u64) -> Result<Vec<CheckResult>> {
    let ladders = random_ladders(config, seed, 1, config.ladders)?;
    let mut balance = 0f64;
    let mut fixed = 0f64;
    let mut columns = 0f64;
    for ladder in &ladders {
        let mut rates = build_mjhmc_rate_matrix(ladder)?;
        if config.fault_injection {
            rates = inject_fault(&rates, ladder, config.fault_scale)?;
        }
        balance = balance.max(balance_check(&rates, ladder));
        fixed = fixed.max(embedded_fixed_point_check(&rates, ladder)?);
        columns = columns
            .max(rates.column_sum_residual())
            .max(embedded_chain(&rates)?.column_sum_residual())
            .max(build_hmc_ladder_chain(ladder)?.column_sum_residual());
    }

    // Eigensolves dominate the cost, so use fewer, smaller ladders here.
    let spectral = CheckSection {
        max_rungs: config.max_rungs.min(64).max(config.min_rungs),
        ..config.clone()
    };
    let mut similarity = 0f64;
    let mut leading = 0f64;
    for ladder in random_ladders(&spectral, seed, 2, config.ladders.min(50))? {
        let rates = build_mjhmc_rate_matrix(&ladder)?;
        let (a, b) = similarity_check(&rates)?;
        similarity = similarity.max(spectrum_distance(&a, &b));
        let top = eigenvalues(embedded_chain(&rates)?.matrix())?
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        leading = leading.max((top - 1.0).abs());
    }
    Ok(vec![
        CheckResult::new("balance", balance, 1e-10),
        CheckResult::new("embedded_fixed_point", fixed, 1e-10),
        CheckResult::new("column_sums", columns, 1e-12),
        CheckResult::new("similarity_spectra", similarity, 1e-8),
        CheckResult::new("leading_eigenvalue", leading, 1e-10),
    ])
}

fn reversibility_check(seed: u64) -> Result<CheckResult> {
    let ef = RoughWell::default();
    let mut rng = derived(seed, &[3]);
    let mut worst = 0f64;
    for (epsilon, steps) in [(0.1, 1), (0.1, 25), (1.0, 1), (1.0, 25)] {
        let params = LeapfrogParams::new(epsilon, steps)?;
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| 50.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let v: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
            let z = PhaseState::new(x, v)?;
            let back = flip(&leapfrog(&flip(&leapfrog(&z, &params, &ef)?), &params, &ef)?);
            let inv = leapfrog_inverse(&leapfrog(&z, &params, &ef)?, &params, &ef)?;
            let scale = z.norm().max(1.0);
            worst = worst.max(back.distance(&z) / scale).max(inv.distance(&z) / scale);
        }
    }
    Ok(CheckResult::new("flfl_reversibility", worst, 1e-9))
}

/// Largest deviation between simulated and analytic race outcomes, in
/// binomial standard deviations.
fn race_check(config: &CheckSection, seed: u64) -> CheckResult {
    let mut rng = derived(seed, &[4]);
    let mut vectors = vec![vec![1.0, 1.0], vec![1.0, 3.0], vec![1.0, 2.0, 3.0]];
    for i in 0..20 {
        let len = 2 + i % 2;
        vectors.push((0..len).map(|_| rng.random_range(0.05..5.0)).collect());
    }
    let n = config.race_trials as f64;
    let mut worst = 0f64;
    for rates in &vectors {
        let p = competing_exponential_probabilities(rates);
        let freq = min_exponential_oracle(rates, config.race_trials, &mut rng);
        for (f, p) in freq.iter().zip(&p) {
            let sigma = (p * (1.0 - p) / n).sqrt();
            worst = worst.max((f - p).abs() / sigma);
        }
    }
    CheckResult::new("exponential_race_sigma", worst, 3.0)
}

/// Relative error of the empirical mean holding time at a fixed rough-well
/// state against `1 / (gamma_L + gamma_F + beta)`.
fn holding_time_check(config: &CheckSection, seed: u64) -> Result<CheckResult> {
    let ef = RoughWell::default();
    let params = LeapfrogParams::new(1.0, 5)?;
    let init = PhaseState::new(vec![1.5, -2.0], vec![0.7, 0.4])?;
    let (cache, _) = StateCache::new(init, &params, &ef)?;
    let rates = cache.rates(0.3)?;
    let mut rng = derived(seed, &[5]);
    let total: f64 = (0..config.holding_draws)
        .map(|_| draw_waiting_times(&rates, &mut rng).holding_time())
        .sum();
    let mean = total / config.holding_draws as f64;
    let expected = 1.0 / rates.total();
    Ok(CheckResult::new("holding_time_law", (mean / expected - 1.0).abs(), 0.02))
}

fn energy_conservation_check() -> Result<CheckResult> {
    let ef = RoughWell::default();
    let params = LeapfrogParams::new(1e-3, 100)?;
    let z = Evaluated::new(PhaseState::new(vec![3.0, -1.0], vec![0.5, 0.8])?, &ef)?;
    let (end, _) = crate::phase::integrate(&z, &params, &ef)?;
    Ok(CheckResult::new(
        "small_step_energy_drift",
        (end.hamiltonian() - z.hamiltonian()).abs(),
        1e-6,
    ))
}

pub fn run_checks(config: &CheckSection, seed: u64) -> Result<CheckReport> {
    config.validate()?;
    let mut checks = ladder_checks(config, seed)?;
    checks.push(reversibility_check(seed)?);
    checks.push(race_check(config, seed));
    checks.push(holding_time_check(config, seed)?);
    checks.push(energy_conservation_check()?);
    Ok(CheckReport { checks })
}
