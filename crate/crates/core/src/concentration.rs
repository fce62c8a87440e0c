//! Concentration rates for empirical measures on doubling spaces, the rate table for
//! compact subsets of `(ℝ^m, ‖·‖∞)`, and a seeded Monte Carlo experiment comparing
//! `E[W_{1/2}(μ, μ^N)]` against the mean and deviation bounds.
//!
//! Every `log₂` below is base two; natural logarithms are never substituted.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::doubling::{exact_doubling_constant, DoublingError, DEFAULT_EXACT_LIMIT};
use crate::embedding::tolerant_ceil;
use crate::graph::{FiniteMetric, METRIC_TOL};
use crate::transport::{empirical_measure_with_rng, wasserstein, DiscreteMeasure, TransportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConcentrationError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("minimum distance {0} is below 1")]
    MinDistanceBelowOne(f64),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Doubling(#[from] DoublingError),
}

fn bad(msg: impl Into<String>) -> ConcentrationError {
    ConcentrationError::BadParams(msg.into())
}

/// `⌈4 M^{5 + log₂ 5}⌉`, the dimension of the low-distortion embedding.
pub fn low_distortion_dimension(doubling_m: u64) -> f64 {
    tolerant_ceil(4.0 * (doubling_m as f64).powf(5.0 + 5f64.log2()))
}

pub fn r1(n: u64) -> f64 {
    let n = n as f64;
    n.log2() / n.sqrt()
}

pub fn r2(k: usize, diam: f64, n: u64) -> f64 {
    k as f64 * diam.sqrt() / (n as f64).sqrt()
}

pub fn r3(doubling_m: u64, n: u64) -> f64 {
    (n as f64).powf(-1.0 / low_distortion_dimension(doubling_m))
}

/// `(3 log₂(2/δ) diam)^{1/2} / N^{1/2}`.
pub fn t_dev(n: u64, delta: f64, diam: f64) -> f64 {
    (3.0 * (2.0 / delta).log2() * diam).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBundle {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// Denominator of the `r₃` exponent.
    pub r3_dimension: f64,
    pub t_dev: f64,
    pub n: u64,
    pub k: usize,
    pub diam: f64,
    pub delta: f64,
    pub doubling_m: u64,
    /// `diam^{1/2} min{2r₁, 24r₂}`.
    pub mean_bound: f64,
    /// `diam^{1/2} min{r₁, 24r₂, r₃} + 𝔱`.
    pub dev_bound: f64,
    /// Deviation bound with the `C_{m̃,1}(D̃ − 1)` factors carried through each
    /// embedding regime instead of the stated coefficients.
    pub dev_bound_proof: f64,
}

fn check_rate_params(k: usize, n: u64, diam: f64) -> Result<(), ConcentrationError> {
    if n < 4 {
        return Err(bad(format!("sample count {n} must be at least 4")));
    }
    if k < 1 {
        return Err(bad("space must have at least one point"));
    }
    if !(diam >= 0.0 && diam.is_finite()) {
        return Err(bad(format!("diameter {diam} must be finite and nonnegative")));
    }
    Ok(())
}

/// `diam^{1/2} min{2r₁(N), 24r₂(N)}`.
pub fn prop41_mean_bound(k: usize, n: u64, diam: f64) -> Result<f64, ConcentrationError> {
    check_rate_params(k, n, diam)?;
    Ok(diam.sqrt() * (2.0 * r1(n)).min(24.0 * r2(k, diam, n)))
}

pub fn prop41_rates(
    k: usize,
    n: u64,
    diam: f64,
    delta: f64,
    doubling_m: u64,
) -> Result<RateBundle, ConcentrationError> {
    check_rate_params(k, n, diam)?;
    if k < 2 {
        return Err(bad(format!("point count {k} must be at least 2")));
    }
    if doubling_m < 2 {
        return Err(bad(format!("doubling constant {doubling_m} must be at least 2")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(bad(format!("delta {delta} outside (0, 1)")));
    }
    let (a, b, c) = (r1(n), r2(k, diam, n), r3(doubling_m, n));
    let t = t_dev(n, delta, diam);
    let root = diam.sqrt();
    Ok(RateBundle {
        r1: a,
        r2: b,
        r3: c,
        r3_dimension: low_distortion_dimension(doubling_m),
        t_dev: t,
        n,
        k,
        diam,
        delta,
        doubling_m,
        mean_bound: root * (2.0 * a).min(24.0 * b),
        dev_bound: root * a.min(24.0 * b).min(c) + t,
        dev_bound_proof: proof_form_deviation(k, n, diam, doubling_m) + t,
    })
}

/// `min over regimes of C_{m̃,1}(D̃ − 1) diam^{1/2} rate_{m̃}(N)` for the
/// low-distortion, two-dimensional and line embeddings.
fn proof_form_deviation(k: usize, n: u64, diam: f64, doubling_m: u64) -> f64 {
    let root = diam.sqrt();
    let nf = n as f64;
    let low_dim = low_distortion_dimension(doubling_m);
    let regimes = [
        (low_dim, 21.0 / 20.0),
        (2.0, 2.0),
        (1.0, 12.0 * k as f64 * root),
    ];
    regimes
        .iter()
        .map(|&(dim, distortion)| {
            let rate = if dim == 2.0 {
                nf.log2() / nf.sqrt()
            } else {
                nf.powf(-1.0 / dim.max(2.0))
            };
            table1_value(dim, 1.0) * (distortion - 1.0) * root * rate
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateRegime {
    /// `m < 2α`: rate `N^{−1/2}`.
    Subcritical,
    /// `m = 2α`: rate `⌈log₂ N⌉ N^{−1/2}`.
    Critical,
    /// `m > 2α`: rate `N^{−α/m}`.
    Supercritical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTableEntry {
    pub m: u64,
    pub alpha: f64,
    pub regime: RateRegime,
    pub constant: f64,
}

impl RateTableEntry {
    pub fn rate(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self.regime {
            RateRegime::Subcritical => nf.powf(-0.5),
            RateRegime::Critical => nf.log2().ceil() / nf.sqrt(),
            RateRegime::Supercritical => nf.powf(-self.alpha / self.m as f64),
        }
    }
}

fn regime(m: f64, alpha: f64) -> RateRegime {
    let two_alpha = 2.0 * alpha;
    if m < two_alpha {
        RateRegime::Subcritical
    } else if m == two_alpha {
        RateRegime::Critical
    } else {
        RateRegime::Supercritical
    }
}

fn table1_value(m: f64, alpha: f64) -> f64 {
    let half = m / 2.0;
    match regime(m, alpha) {
        RateRegime::Subcritical => 2f64.powf(half - 2.0 * alpha) / (1.0 - 2f64.powf(half - alpha)),
        RateRegime::Critical => 1.0 / (2f64.powf(alpha - 1.0) * alpha),
        RateRegime::Supercritical => {
            let base = (half - alpha) / (2.0 * alpha * (1.0 - 2f64.powf(alpha - half)));
            2.0 * base.powf(2.0 * alpha / m) * (1.0 + alpha / (2f64.powf(alpha) * (half - alpha)))
        }
    }
}

/// Constant `C_{m,α}` and rate of the expected Wasserstein error in dimension `m`,
/// with the simplified critical-case constant `1 / (2^{α−1} α)`.
pub fn table1_constant(m: u64, alpha: f64) -> Result<RateTableEntry, ConcentrationError> {
    if m < 1 {
        return Err(bad("dimension must be at least 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(bad(format!("alpha {alpha} outside (0, 1]")));
    }
    Ok(RateTableEntry {
        m,
        alpha,
        regime: regime(m as f64, alpha),
        constant: table1_value(m as f64, alpha),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: u64,
    pub trials: usize,
    pub mean: f64,
    pub std: f64,
    /// Empirical `(1 − δ)`-quantile of `|W − mean|`.
    pub quantile: f64,
    pub bound_mean: f64,
    pub bound_dev: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n_values: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub exact_limit: usize,
}

impl ExperimentConfig {
    pub fn new(n_values: Vec<u64>, trials: usize, seed: u64) -> Self {
        Self {
            n_values,
            trials,
            seed,
            delta: 0.1,
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }
}

/// Stream id of one `(n, trial)` cell, independent of evaluation order.
pub fn substream(n_index: usize, trial: usize) -> u64 {
    ((n_index as u64) << 40) | trial as u64
}

/// Nearest-rank `q`-quantile of `values`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// `W_{1/2}(base, base^N)` for each trial and each `N`, against the mean and
/// deviation bounds.
pub fn run_concentration_experiment(
    metric: &FiniteMetric,
    base: &DiscreteMeasure,
    config: &ExperimentConfig,
) -> Result<Vec<ConcentrationRow>, ConcentrationError> {
    if config.trials == 0 {
        return Err(bad("trials must be at least 1"));
    }
    if base.len() != metric.k() {
        return Err(TransportError::MarginalMismatch {
            expected: metric.k(),
            got: base.len(),
        }
        .into());
    }
    if let Some(min) = metric.min_distance() {
        if min < 1.0 - METRIC_TOL {
            return Err(ConcentrationError::MinDistanceBelowOne(min));
        }
    }
    let doubling = exact_doubling_constant(metric, config.exact_limit)?;
    let doubling_m = doubling.exact().unwrap_or(doubling.upper_m).max(2) as u64;
    let k = metric.k().max(2);
    let diam = metric.diameter();

    config
        .n_values
        .iter()
        .enumerate()
        .map(|(n_index, &n)| {
            let rates = prop41_rates(k, n, diam, config.delta, doubling_m)?;
            let values: Vec<f64> = (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(substream(n_index, trial));
                    let emp = empirical_measure_with_rng(base, n as usize, &mut rng)?;
                    Ok(wasserstein(metric, base, &emp, 0.5)?.value)
                })
                .collect::<Result<_, ConcentrationError>>()?;
            let trials = values.len() as f64;
            let mean = values.iter().sum::<f64>() / trials;
            let var = if values.len() > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1.0)
            } else {
                0.0
            };
            let deviations: Vec<f64> = values.iter().map(|v| (v - mean).abs()).collect();
            let q = quantile(&deviations, 1.0 - config.delta);
            Ok(ConcentrationRow {
                n,
                trials: values.len(),
                mean,
                std: var.sqrt(),
                quantile: q,
                bound_mean: rates.mean_bound,
                bound_dev: rates.dev_bound,
                pass: mean <= rates.mean_bound && q <= rates.dev_bound,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
