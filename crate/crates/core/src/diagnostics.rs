//! Autocorrelation against gradient evaluations, and the fit of
//! `rho(n; r) = Re[exp(r n)]` whose real part is the tuning objective.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrSeries {
    /// Lags in gradient evaluations, starting at 0.
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
}

impl AutocorrSeries {
    pub fn new(lags: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lags.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: lags.len(),
                got: values.len(),
            });
        }
        if lags.first() != Some(&0.0) {
            return Err(Error::invalid("lags", "must start at 0"));
        }
        if lags.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("lags", "must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "must be finite"));
        }
        Ok(AutocorrSeries { lags, values })
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }
}

/// Index whose cumulative count is nearest to `target`, scanning from the
/// first index with the smallest distance.
fn nearest(counts: &[u64], target: f64) -> usize {
    let j = counts.partition_point(|&c| (c as f64) < target);
    if j == 0 {
        return 0;
    }
    if j == counts.len() {
        return counts.len() - 1;
    }
    if target - counts[j - 1] as f64 <= counts[j] as f64 - target {
        // first sample carrying that count
        counts.partition_point(|&c| c < counts[j - 1])
    } else {
        j
    }
}

/// Autocorrelation of centred positions on a uniform grid of `n_lags` lags
/// from 0 to `max_lag_evals` gradient evaluations, averaged over
/// dimensions.
///
/// Sample `i` is paired with the sample whose cumulative gradient count is
/// nearest to `count_i + lag`. Pairs running past the end of the chain are
/// dropped. The normalization uses the full-chain mean and variance, so
/// lag 0 is exactly one.
pub fn autocorrelation(
    positions: &[Vec<f64>],
    gradient_evals: &[u64],
    max_lag_evals: f64,
    n_lags: usize,
) -> Result<AutocorrSeries> {
    let n = positions.len();
    if n < 10 {
        return Err(Error::DegenerateSeries(format!("chain of length {n} is shorter than 10")));
    }
    if gradient_evals.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: gradient_evals.len(),
        });
    }
    if gradient_evals.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("gradient_evals", "must be nondecreasing"));
    }
    if n_lags < 2 || !(max_lag_evals > 0.0 && max_lag_evals.is_finite()) {
        return Err(Error::invalid("lags", "need at least 2 lags and a positive maximum lag"));
    }
    let dim = positions[0].len();
    if positions.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("positions", "ragged dimensions"));
    }

    let mut centred = vec![vec![0.0; n]; dim];
    let mut variance = vec![0.0; dim];
    for d in 0..dim {
        let mean = positions.iter().map(|p| p[d]).sum::<f64>() / n as f64;
        for (i, p) in positions.iter().enumerate() {
            centred[d][i] = p[d] - mean;
        }
        variance[d] = centred[d].iter().map(|c| c * c).sum::<f64>() / n as f64;
        if !(variance[d] > 0.0) {
            return Err(Error::DegenerateSeries(format!("dimension {d} has zero variance")));
        }
    }

    let last = *gradient_evals.last().expect("nonempty") as f64;
    let lags: Vec<f64> = (0..n_lags)
        .map(|m| max_lag_evals * m as f64 / (n_lags - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(n_lags);
    values.push(1.0);
    for &lag in &lags[1..] {
        let mut sums = vec![0.0; dim];
        let mut pairs = 0usize;
        for i in 0..n {
            let target = gradient_evals[i] as f64 + lag;
            if target > last {
                break;
            }
            let j = nearest(gradient_evals, target);
            for d in 0..dim {
                sums[d] += centred[d][i] * centred[d][j];
            }
            pairs += 1;
        }
        let c = if pairs == 0 {
            0.0
        } else {
            (0..dim)
                .map(|d| sums[d] / (pairs as f64 * variance[d]))
                .sum::<f64>()
                / dim as f64
        };
        values.push(c);
    }
    AutocorrSeries::new(lags, values)
}

/// Fitted `r = r_real + i r_imag`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub r_real: f64,
    pub r_imag: f64,
    /// Sum of squared errors at the reported `r`.
    pub residual: f64,
}

fn fit_objective(series: &AutocorrSeries, decay: f64, freq: f64) -> f64 {
    series
        .lags
        .iter()
        .zip(&series.values)
        .map(|(&n, &c)| {
            let model = (-decay * n).exp() * (freq * n).cos();
            (model - c) * (model - c)
        })
        .sum()
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

const GRID_POINTS: usize = 80;
const REL_TOL: f64 = 1e-6;

/// Least-squares fit of `Re[exp(r n)]` to the series: a log-spaced grid over
/// decay rate and oscillation frequency, compass search in
/// `(ln decay, frequency)` down to relative step `1e-6`, then a damped
/// Gauss-Newton polish for the narrow valleys where coordinate moves stall.
pub fn fit_decay(series: &AutocorrSeries) -> Result<DecayFit> {
    if series.len() < 4 {
        return Err(Error::DegenerateSeries(format!(
            "fit needs at least 4 lags, got {}",
            series.len()
        )));
    }
    let n_min = series.lags[1];
    let n_max = *series.lags.last().expect("nonempty");
    let decays = log_grid(1e-3 / n_max, 10.0 / n_min, GRID_POINTS);
    let mut freqs = vec![0.0];
    freqs.extend(log_grid(0.1 / n_max, std::f64::consts::PI / n_min, GRID_POINTS));

    let mut best: Option<(f64, f64, f64)> = None;
    for &d in &decays {
        for &b in &freqs {
            let f = fit_objective(series, d, b);
            if f.is_finite() && best.is_none_or(|(_, _, bf)| f < bf) {
                best = Some((d, b, f));
            }
        }
    }
    let (d, b, mut fbest) = best.ok_or(Error::FitFailure)?;

    let mut u = d.ln();
    let mut b = b;
    let mut du = (decays[1] / decays[0]).ln();
    let freq_floor = 0.1 / n_max;
    let mut db = if b > 0.0 { b * (freqs[2] / freqs[1] - 1.0) } else { freq_floor };
    for _ in 0..100_000 {
        if du < REL_TOL && db < REL_TOL * b.max(freq_floor) {
            break;
        }
        let mut moved = false;
        for (cu, cb) in [(u + du, b), (u - du, b)] {
            let f = fit_objective(series, cu.exp(), cb);
            if f < fbest {
                (u, b, fbest, moved) = (cu, cb, f, true);
                break;
            }
        }
        if !moved {
            du *= 0.5;
        }
        let mut moved_b = false;
        for cb in [b + db, (b - db).max(0.0)] {
            if cb == b {
                continue;
            }
            let f = fit_objective(series, u.exp(), cb);
            if f < fbest {
                (b, fbest, moved_b) = (cb, f, true);
                break;
            }
        }
        if !moved_b {
            db *= 0.5;
        }
    }
    let (decay, freq, residual) = polish(series, u.exp(), b, fbest);
    Ok(DecayFit {
        r_real: -decay,
        r_imag: freq,
        residual,
    })
}

/// Levenberg-Marquardt on `(decay, freq)`. Only ever lowers the objective,
/// so it cannot undo the compass search.
fn polish(series: &AutocorrSeries, mut decay: f64, mut freq: f64, mut best: f64) -> (f64, f64, f64) {
    let mut damping = 1e-3;
    for _ in 0..200 {
        let (mut jtj, mut jte) = ([[0.0; 2]; 2], [0.0; 2]);
        for (&n, &c) in series.lags.iter().zip(&series.values) {
            let envelope = (-decay * n).exp();
            let (sin, cos) = (freq * n).sin_cos();
            let e = envelope * cos - c;
            let grad = [-n * envelope * cos, -n * envelope * sin];
            for i in 0..2 {
                jte[i] += grad[i] * e;
                for j in 0..2 {
                    jtj[i][j] += grad[i] * grad[j];
                }
            }
        }
        let a = [
            [jtj[0][0] * (1.0 + damping), jtj[0][1]],
            [jtj[1][0], jtj[1][1] * (1.0 + damping)],
        ];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            break;
        }
        let step_d = -(a[1][1] * jte[0] - a[0][1] * jte[1]) / det;
        let step_b = -(a[0][0] * jte[1] - a[1][0] * jte[0]) / det;
        let cand_d = decay + step_d;
        let cand_b = (freq + step_b).max(0.0);
        let f = if cand_d > 0.0 {
            fit_objective(series, cand_d, cand_b)
        } else {
            f64::INFINITY
        };
        if f < best {
            let small = step_d.abs() <= 1e-12 * decay && (cand_b - freq).abs() <= 1e-12 * freq.max(decay);
            (decay, freq, best) = (cand_d, cand_b, f);
            damping = (damping / 3.0).max(1e-12);
            if small {
                break;
            }
        } else {
            damping *= 4.0;
            if damping > 1e8 {
                break;
            }
        }
    }
    (decay, freq, best)
}

/// The quantity minimized by hyperparameter search. More negative means
/// faster decorrelation per gradient evaluation.
pub fn tuning_objective(fit: &DecayFit) -> f64 {
    fit.r_real
}

/// Standard error of a weighted mean by batch means over `n_batches`
/// contiguous batches.
pub fn batch_standard_error(values: &[f64], weights: &[f64], n_batches: usize) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: weights.len(),
        });
    }
    if n_batches < 2 || values.len() < n_batches {
        return Err(Error::invalid("n_batches", "need at least 2 batches and one sample per batch"));
    }
    let size = values.len() / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|bi| {
            let range = bi * size..(bi + 1) * size;
            let w: f64 = weights[range.clone()].iter().sum();
            values[range.clone()]
                .iter()
                .zip(&weights[range])
                .map(|(v, w)| v * w)
                .sum::<f64>()
                / w
        })
        .collect();
    let mean = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    Ok((var / n_batches as f64).sqrt())
}
