//! The `mjhmc` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 failed invariant check.

use crate::checks::run_checks;
use crate::config::RunConfig;
use crate::energy::EnergyFunction;
use crate::harness::{autocorr_for, SamplerKind};
use crate::hmc::{HmcChain, HmcConfig};
use crate::ladder::random_ladder_experiment;
use crate::output::{write_autocorr, write_gap_table, write_json, write_trials, ChainWriter, Metadata, HMC_MOMENTUM_REFRESH};
use crate::phase::PhaseState;
use crate::rng::{derive_seed, derived};
use crate::sampler::{MjhmcChain, SamplerConfig, TransitionKind};
use crate::tuner::random_search;
use crate::Result;
#[cfg(test)]
use crate::Error;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mjhmc", version, about = "Markov jump HMC sampler and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one MJHMC or HMC chain and write every sample.
    Sample(CommonArgs),
    /// Mean spectral gaps of both samplers on random ring ladders.
    SpectralGap(CommonArgs),
    /// Autocorrelation curves and decay fits for both samplers.
    Autocorr(CommonArgs),
    /// Random hyperparameter search on the decay-rate objective.
    Tune(CommonArgs),
    /// Run the invariant suite.
    Check(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Sample(a)
            | Command::SpectralGap(a)
            | Command::Autocorr(a)
            | Command::Tune(a)
            | Command::Check(a) => a,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::SpectralGap(_) => "spectral-gap",
            Command::Autocorr(_) => "autocorr",
            Command::Tune(_) => "tune",
            Command::Check(_) => "check",
        }
    }
}

/// Terminal status of a command that ran to completion without an error.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    ChecksFailed,
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::ChecksFailed) => EXIT_CHECK_FAILED,
        Err(e) if e.is_numerical() => EXIT_NUMERICAL,
        Err(_) => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = run(&cli.command);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}

pub fn run(command: &Command) -> Result<Outcome> {
    let args = command.args();
    let config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::from_toml_str("")?,
    }
    .with_seed(args.seed);
    std::fs::create_dir_all(&args.out)?;
    let meta = Metadata::new(command.name(), &config.hash(), config.seed);
    match command {
        Command::Sample(_) => cmd_sample(&config, &args.out, meta),
        Command::SpectralGap(_) => cmd_spectral_gap(&config, &args.out, meta),
        Command::Autocorr(_) => cmd_autocorr(&config, &args.out, meta),
        Command::Tune(_) => cmd_tune(&config, &args.out, meta),
        Command::Check(_) => cmd_check(&config, &args.out, meta),
    }
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    config: &'a RunConfig,
    status: &'static str,
    error: Option<String>,
    samples: usize,
    gradient_evals: u64,
    transitions: Option<[usize; 3]>,
    acceptance_rate: Option<f64>,
}

fn initial_state(config: &RunConfig) -> Result<PhaseState> {
    let s = &config.sample;
    let x = s.init_position.clone().unwrap_or_else(|| config.zero_position());
    match &s.init_momentum {
        Some(v) => PhaseState::new(x, v.clone()),
        None => PhaseState::with_random_momentum(x, &mut derived(config.seed, &[0])),
    }
}

pub fn cmd_sample(config: &RunConfig, out: &Path, meta: Metadata) -> Result<Outcome> {
    let s = &config.sample;
    let ef: Arc<dyn EnergyFunction> = config.target.build()?;
    let init = initial_state(config)?;
    let chain_seed = derive_seed(config.seed, &[1]);
    let mut meta = meta
        .with("sampler", s.sampler)
        .with("epsilon", s.epsilon)
        .with("steps", s.steps)
        .with("beta", s.beta);
    if s.sampler == SamplerKind::Hmc {
        meta = meta.with("momentum_refresh", HMC_MOMENTUM_REFRESH);
    }
    let mut writer = ChainWriter::create(&out.join("chain.csv"), &meta, ef.dim())?;
    let mut transitions = [0usize; 3];
    let (failure, evals, acceptance) = match s.sampler {
        SamplerKind::Mjhmc => {
            let cfg = SamplerConfig::new(s.epsilon, s.steps, s.beta, s.n_samples, chain_seed)?;
            match MjhmcChain::new(cfg, ef.clone(), init) {
                Err(e) => (Some(e), 0, None),
                Ok(mut chain) => {
                    let mut failure = None;
                    for _ in 0..s.n_samples {
                        match chain.step() {
                            Ok(sample) => {
                                transitions[match sample.transition_out {
                                    TransitionKind::L => 0,
                                    TransitionKind::F => 1,
                                    TransitionKind::R => 2,
                                }] += 1;
                                writer.write_mjhmc(&sample)?;
                            }
                            Err(e) => {
                                failure = Some(e);
                                break;
                            }
                        }
                    }
                    (failure, chain.gradient_evals(), None)
                }
            }
        }
        SamplerKind::Hmc => {
            let cfg = HmcConfig::new(s.epsilon, s.steps, s.beta, s.n_samples, chain_seed)?;
            match HmcChain::new(cfg, ef.clone(), init) {
                Err(e) => (Some(e), 0, None),
                Ok(mut chain) => {
                    let mut failure = None;
                    for _ in 0..s.n_samples {
                        match chain.step() {
                            Ok(sample) => writer.write_hmc(&sample)?,
                            Err(e) => {
                                failure = Some(e);
                                break;
                            }
                        }
                    }
                    (failure, chain.gradient_evals(), Some(chain.acceptance_rate()))
                }
            }
        }
    };
    let summary = SampleSummary {
        config,
        status: if failure.is_some() { "failed" } else { "ok" },
        error: failure.as_ref().map(|e| e.to_string()),
        samples: writer.rows(),
        gradient_evals: evals,
        transitions: (s.sampler == SamplerKind::Mjhmc).then_some(transitions),
        acceptance_rate: acceptance,
    };
    write_json(&out.join("chain.json"), &meta, &summary)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(Outcome::Ok),
    }
}

pub fn cmd_spectral_gap(config: &RunConfig, out: &Path, meta: Metadata) -> Result<Outcome> {
    let exp = &config.spectral_gap;
    let rows = random_ladder_experiment(exp, config.seed)?;
    let meta = meta
        .with("draws_per_size", exp.draws_per_size)
        .with("holding", exp.holding);
    write_gap_table(&out.join("spectral_gap.csv"), &meta, &rows)?;
    for r in &rows {
        println!("k={:<4} {:<6} mean_gap={:.6e} se={:.2e}", r.k, r.sampler.name(), r.mean_gap, r.std_error);
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct AutocorrEntry {
    sampler: SamplerKind,
    epsilon: f64,
    steps: usize,
    beta: f64,
    r_real: f64,
    r_imag: f64,
    residual: f64,
    raw_samples: usize,
    total_gradient_evals: u64,
    acceptance_rate: Option<f64>,
}

pub fn cmd_autocorr(config: &RunConfig, out: &Path, meta: Metadata) -> Result<Outcome> {
    let a = &config.autocorr;
    let ef = config.target.build()?;
    let init = a.init_position.clone().unwrap_or_else(|| config.zero_position());
    let mut entries = Vec::new();
    for (i, (kind, params)) in [(SamplerKind::Mjhmc, a.mjhmc), (SamplerKind::Hmc, a.hmc)].into_iter().enumerate() {
        let run = autocorr_for(kind, &params, ef.clone(), &init, &a.budget, derive_seed(config.seed, &[i as u64]))?;
        let meta = meta
            .clone()
            .with("sampler", kind)
            .with("epsilon", params.epsilon)
            .with("steps", params.steps)
            .with("beta", params.beta)
            .with("r_real", run.fit.r_real)
            .with("r_imag", run.fit.r_imag);
        write_autocorr(&out.join(format!("autocorr_{kind}.csv")), &meta, &run.series)?;
        println!("{kind:<6} r = {:.6e} + {:.6e}i  residual={:.3e}", run.fit.r_real, run.fit.r_imag, run.fit.residual);
        entries.push(AutocorrEntry {
            sampler: kind,
            epsilon: params.epsilon,
            steps: params.steps,
            beta: params.beta,
            r_real: run.fit.r_real,
            r_imag: run.fit.r_imag,
            residual: run.fit.residual,
            raw_samples: run.run.raw_samples,
            total_gradient_evals: run.run.total_gradient_evals,
            acceptance_rate: run.run.acceptance_rate,
        });
    }
    write_json(&out.join("autocorr.json"), &meta, &entries)?;
    Ok(Outcome::Ok)
}

pub fn cmd_tune(config: &RunConfig, out: &Path, meta: Metadata) -> Result<Outcome> {
    let t = &config.tune;
    let ef = config.target.build()?;
    let init = t.init_position.clone().unwrap_or_else(|| config.zero_position());
    let result = random_search(&t.space, t.trials, t.sampler, &ef, &init, &t.budget, config.seed);
    let meta = meta.with("sampler", t.sampler).with("trials", t.trials);
    let result = result?;
    write_trials(&out.join("trials.csv"), &meta, &result.trials)?;
    write_json(&out.join("best.json"), &meta, &result.best)?;
    let b = &result.best;
    println!(
        "best {}: epsilon={} steps={} beta={} objective={:.6e}",
        b.sampler,
        b.params.epsilon,
        b.params.steps,
        b.params.beta,
        b.objective.unwrap_or(f64::NAN)
    );
    Ok(Outcome::Ok)
}

pub fn cmd_check(config: &RunConfig, out: &Path, meta: Metadata) -> Result<Outcome> {
    let c = &config.check;
    let report = run_checks(c, config.seed)?;
    let meta = meta.with("fault_injection", c.fault_injection);
    for line in &report.checks {
        println!("{line}");
    }
    write_json(&out.join("check.json"), &meta, &report)?;
    if report.passed() {
        println!("all {} checks passed", report.checks.len());
        Ok(Outcome::Ok)
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        println!("{failed} of {} checks failed", report.checks.len());
        Ok(Outcome::ChecksFailed)
    }
}
