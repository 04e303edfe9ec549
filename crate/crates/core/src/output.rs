//! CSV and JSON writers. Every CSV file starts with `# key=value` comment
//! lines carrying the run metadata; every JSON file embeds the same
//! metadata under `"meta"`.

use crate::diagnostics::AutocorrSeries;
use crate::hmc::HmcSample;
use crate::ladder::GapSummary;
use crate::sampler::WeightedSample;
use crate::tuner::TrialRecord;
use crate::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Written into every output so that cost axes are unambiguous.
pub const GRADIENT_CONVENTION: &str =
    "true gradient evaluations: one per leapfrog step with the start gradient cached; \
     MJHMC init 2M+1, L jump M, F jump 0, R jump 2M; HMC init 1, step M";

pub const HMC_MOMENTUM_REFRESH: &str = "full redraw with probability beta per step";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub gradient_convention: String,
    /// Command-specific entries, written in key order.
    pub extra: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Metadata {
            version: crate::VERSION.to_string(),
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            gradient_convention: GRADIENT_CONVENTION.to_string(),
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.to_string(), value.to_string());
        self
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# version={}", self.version),
            format!("# command={}", self.command),
            format!("# config_hash={}", self.config_hash),
            format!("# seed={}", self.seed),
            format!("# gradient_convention={}", self.gradient_convention),
        ];
        lines.extend(self.extra.iter().map(|(k, v)| format!("# {k}={v}")));
        lines
    }
}

/// Reads the `# key=value` header of a CSV file written by this module.
pub fn read_header(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map_while(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn open_csv(path: &Path, meta: &Metadata) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    for line in meta.header_lines() {
        writeln!(file, "{line}")?;
    }
    Ok(csv::Writer::from_writer(file))
}

/// Streams chain rows to disk, flushing after each one, so a chain that
/// aborts midway still leaves every completed sample on disk.
pub struct ChainWriter {
    inner: csv::Writer<BufWriter<File>>,
    dim: usize,
    rows: usize,
}

impl ChainWriter {
    pub fn create(path: &Path, meta: &Metadata, dim: usize) -> Result<Self> {
        let mut inner = open_csv(path, meta)?;
        let mut header = vec!["step".to_string()];
        header.extend((0..dim).map(|i| format!("x{i}")));
        header.extend((0..dim).map(|i| format!("v{i}")));
        header.extend(["holding_time", "transition", "cumulative_gradient_evals"].map(String::from));
        inner.write_record(&header).map_err(csv_error)?;
        inner.flush()?;
        Ok(ChainWriter { inner, dim, rows: 0 })
    }

    fn row(&mut self, x: &[f64], v: &[f64], holding: f64, transition: &str, evals: u64) -> Result<()> {
        if x.len() != self.dim || v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut rec = vec![self.rows.to_string()];
        rec.extend(x.iter().map(|a| a.to_string()));
        rec.extend(v.iter().map(|a| a.to_string()));
        rec.push(holding.to_string());
        rec.push(transition.to_string());
        rec.push(evals.to_string());
        self.inner.write_record(&rec).map_err(csv_error)?;
        self.inner.flush()?;
        self.rows += 1;
        Ok(())
    }

    pub fn write_mjhmc(&mut self, s: &WeightedSample) -> Result<()> {
        let kind = s.transition_out.to_string();
        self.row(&s.state.x, &s.state.v, s.holding_time, &kind, s.cumulative_gradient_evals)
    }

    /// Holding time is 1; the transition column is `L` for an accepted
    /// proposal and `F` for a rejection (the momentum flip).
    pub fn write_hmc(&mut self, s: &HmcSample) -> Result<()> {
        let kind = if s.accepted { "L" } else { "F" };
        self.row(&s.state.x, &s.state.v, 1.0, kind, s.cumulative_gradient_evals)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

pub fn write_gap_table(path: &Path, meta: &Metadata, rows: &[GapSummary]) -> Result<()> {
    let mut w = open_csv(path, meta)?;
    w.write_record(["k", "sampler", "mean_gap", "std_error", "draws"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.sampler.name().to_string(),
            r.mean_gap.to_string(),
            r.std_error.to_string(),
            r.draws.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_autocorr(path: &Path, meta: &Metadata, series: &AutocorrSeries) -> Result<()> {
    let mut w = open_csv(path, meta)?;
    w.write_record(["lag_gradient_evals", "C"]).map_err(csv_error)?;
    for (lag, c) in series.lags.iter().zip(&series.values) {
        w.write_record([lag.to_string(), c.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials(path: &Path, meta: &Metadata, trials: &[TrialRecord]) -> Result<()> {
    let mut w = open_csv(path, meta)?;
    w.write_record(["index", "sampler", "epsilon", "steps", "beta", "seed", "status", "objective", "error"])
        .map_err(csv_error)?;
    for t in trials {
        w.write_record([
            t.index.to_string(),
            t.sampler.to_string(),
            t.params.epsilon.to_string(),
            t.params.steps.to_string(),
            t.params.beta.to_string(),
            t.seed.to_string(),
            format!("{:?}", t.status).to_lowercase(),
            t.objective.map(|o| o.to_string()).unwrap_or_default(),
            t.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `{"meta": ..., "data": ...}`, pretty-printed.
pub fn write_json<T: Serialize>(path: &Path, meta: &Metadata, data: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        meta: &'a Metadata,
        data: &'a T,
    }
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, &Doc { meta, data })
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(())
}
