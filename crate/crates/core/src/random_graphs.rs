//! Erdős–Rényi graphs, the admissibility events `diam ≤ 2` and `deg₋ ≥ c_k`, and
//! the analytic lower bounds on their probabilities.
//!
//! `log` in `p(k) = (C log k / k)^{1/2}` and in the probability exponents is the
//! natural logarithm unless [`LogBase::Two`] is selected.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{degree_stats, shortest_path_metric, Diameter, Graph};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RandomGraphError {
    #[error("bad parameters: {0}")]
    BadParams(String),
}

fn bad(msg: impl Into<String>) -> RandomGraphError {
    RandomGraphError::BadParams(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EdgeProbability {
    Fixed { p: f64 },
    /// `p(k) = (C log k / k)^{1/2}`.
    Derived { c: f64, log_base: LogBase },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErdosRenyiSpec {
    pub k: usize,
    pub p: f64,
    pub probability: EdgeProbability,
}

impl ErdosRenyiSpec {
    pub fn fixed(k: usize, p: f64) -> Result<Self, RandomGraphError> {
        if k == 0 {
            return Err(bad("k must be at least 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(bad(format!("edge probability {p} outside [0, 1]")));
        }
        Ok(Self {
            k,
            p,
            probability: EdgeProbability::Fixed { p },
        })
    }

    pub fn derived(k: usize, c: f64, log_base: LogBase) -> Result<Self, RandomGraphError> {
        if !(c.is_finite() && c > 2.0) {
            return Err(bad(format!("C = {c} must exceed 2")));
        }
        if k < 2 {
            return Err(bad("derived mode needs k ≥ 2"));
        }
        let p = (c * log_base.log(k as f64) / k as f64).sqrt();
        if !(p > 0.0 && p <= 1.0) {
            return Err(bad(format!("p(k) = {p} is not in (0, 1]; k is too small for C = {c}")));
        }
        Ok(Self {
            k,
            p,
            probability: EdgeProbability::Derived { c, log_base },
        })
    }

    /// `C` with `p² = C log k / k`; the configured value in derived mode.
    pub fn effective_c(&self) -> f64 {
        match self.probability {
            EdgeProbability::Derived { c, .. } => c,
            EdgeProbability::Fixed { p } => p * p * self.k as f64 / (self.k as f64).ln(),
        }
    }

    pub fn log_base(&self) -> LogBase {
        match self.probability {
            EdgeProbability::Derived { log_base, .. } => log_base,
            EdgeProbability::Fixed { .. } => LogBase::Natural,
        }
    }
}

/// One Bernoulli draw per pair `i < j` in lexicographic order.
pub fn sample_er_with_rng<R: Rng + ?Sized>(spec: &ErdosRenyiSpec, rng: &mut R) -> Graph {
    let k = spec.k;
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if rng.gen_bool(spec.p) {
                pairs.push((i, j));
            }
        }
    }
    Graph::from_unique_pairs(k, pairs)
}

pub fn sample_er(spec: &ErdosRenyiSpec, seed: u64) -> Graph {
    sample_er_with_rng(spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityVerdict {
    pub diam_le_2: bool,
    pub deg_min: usize,
    pub deg_max: usize,
    pub c_k: f64,
    pub admissible: bool,
    /// A non-adjacent pair with no common neighbour, when one exists.
    pub witness: Option<(usize, usize)>,
}

fn neighbor_bitsets(g: &Graph) -> Vec<Vec<u64>> {
    let words = g.k().div_ceil(64);
    (0..g.k())
        .map(|v| {
            let mut bits = vec![0u64; words];
            for &u in g.neighbors(v) {
                bits[u / 64] |= 1 << (u % 64);
            }
            bits
        })
        .collect()
}

/// First non-adjacent pair without a common neighbour.
fn diameter_two_witness(g: &Graph) -> Option<(usize, usize)> {
    let bits = neighbor_bitsets(g);
    (0..g.k())
        .into_par_iter()
        .find_map_first(|i| {
            (i + 1..g.k()).find(|&j| {
                bits[i][j / 64] >> (j % 64) & 1 == 0
                    && bits[i].iter().zip(&bits[j]).all(|(a, b)| a & b == 0)
            })
            .map(|j| (i, j))
        })
}

/// `diam(G) ≤ 2` and `deg₋(G) ≥ c_k`.
pub fn check_admissible(g: &Graph, c_k: f64) -> AdmissibilityVerdict {
    let witness = diameter_two_witness(g);
    let stats = degree_stats(g);
    let diam_le_2 = witness.is_none();
    AdmissibilityVerdict {
        diam_le_2,
        deg_min: stats.deg_min,
        deg_max: stats.deg_max,
        c_k,
        admissible: diam_le_2 && stats.deg_min as f64 >= c_k,
        witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaA1Bounds {
    /// `1 − k e^{−s δ²/(2+δ)} − k e^{−s δ²/2}` with `s = (C k log k)^{1/2}`.
    pub p_degree_event: f64,
    /// `1 − 2k e^{−C k (log k)^{1/2} δ²/2}`.
    pub p_degree_statement: f64,
    /// `1 − k² e^{−C (k−2) log k / k}`.
    pub p_diam_event: f64,
}

/// Lower bounds on the probabilities of the degree window and of `diam ≤ 2`,
/// clamped to `[0, 1]`.
pub fn lemma_a1_probabilities(k: usize, c: f64, delta: f64, log_base: LogBase) -> Result<LemmaA1Bounds, RandomGraphError> {
    if !(c.is_finite() && c > 2.0) {
        return Err(bad(format!("C = {c} must exceed 2")));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(bad(format!("delta = {delta} must be positive")));
    }
    if k < 3 {
        return Err(bad(format!("k = {k} must be at least 3")));
    }
    let kf = k as f64;
    let log_k = log_base.log(kf);
    let s = (c * kf * log_k).sqrt();
    let d2 = delta * delta;
    let clamp = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    Ok(LemmaA1Bounds {
        p_degree_event: clamp(1.0 - kf * (-s * d2 / (2.0 + delta)).exp() - kf * (-s * d2 / 2.0).exp()),
        p_degree_statement: clamp(1.0 - 2.0 * kf * (-c * kf * log_k.sqrt() * d2 / 2.0).exp()),
        p_diam_event: clamp(1.0 - kf * kf * (-c * (kf - 2.0) * log_k / kf).exp()),
    })
}

/// Rule for the degree threshold `c_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CkRule {
    /// `(√C/2)(1 − δ)(k log k)^{1/2}`, the lower end of the degree window.
    Window,
    Fixed { c_k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub sample: usize,
    /// Exact diameter; 1 or 2 when the fast check already settles it.
    pub diam: Diameter,
    pub deg_min: usize,
    pub deg_max: usize,
    pub in_window: bool,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSummary {
    pub schema_version: u32,
    pub spec: ErdosRenyiSpec,
    pub samples: usize,
    pub seed: u64,
    pub delta: f64,
    pub c_k_rule: CkRule,
    pub c_k: f64,
    /// Degree window `[(√C/2)(1−δ)(k log k)^{1/2}, √C(1+δ)(k log k)^{1/2}]`.
    pub window: (f64, f64),
    pub freq_diam: f64,
    pub freq_degree_window: f64,
    pub freq_admissible: f64,
    pub se_diam: f64,
    pub se_degree_window: f64,
    pub bounds: Option<LemmaA1Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventStudy {
    pub summary: EventSummary,
    pub rows: Vec<EventRow>,
}

fn binomial_se(freq: f64, n: usize) -> f64 {
    (freq * (1.0 - freq) / n as f64).sqrt()
}

/// Monte Carlo frequencies of `diam ≤ 2`, of the degree window and of
/// admissibility, next to the analytic lower bounds.
pub fn er_event_study(
    spec: &ErdosRenyiSpec,
    c_k_rule: CkRule,
    samples: usize,
    seed: u64,
    delta: f64,
) -> Result<EventStudy, RandomGraphError> {
    if samples == 0 {
        return Err(bad("samples must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(bad(format!("delta = {delta} outside (0, 1)")));
    }
    let kf = spec.k as f64;
    let c = spec.effective_c();
    let scale = (kf * spec.log_base().log(kf)).sqrt();
    let window = (0.5 * c.sqrt() * (1.0 - delta) * scale, c.sqrt() * (1.0 + delta) * scale);
    let c_k = match c_k_rule {
        CkRule::Window => window.0,
        CkRule::Fixed { c_k } => c_k,
    };
    let rows: Vec<EventRow> = (0..samples)
        .into_par_iter()
        .map(|sample| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(sample as u64);
            let g = sample_er_with_rng(spec, &mut rng);
            let verdict = check_admissible(&g, c_k);
            let diam = if verdict.diam_le_2 {
                Diameter::Finite(if g.is_complete() { 1f64 } else { 2f64 }.min((spec.k - 1) as f64))
            } else {
                shortest_path_metric(&g).diameter()
            };
            EventRow {
                sample,
                diam,
                deg_min: verdict.deg_min,
                deg_max: verdict.deg_max,
                in_window: verdict.deg_min as f64 >= window.0 && verdict.deg_max as f64 <= window.1,
                admissible: verdict.admissible,
            }
        })
        .collect();
    let freq = |pred: &dyn Fn(&EventRow) -> bool| rows.iter().filter(|r| pred(r)).count() as f64 / samples as f64;
    let freq_diam = freq(&|r| r.diam.at_most(2.0));
    let freq_degree_window = freq(&|r| r.in_window);
    let bounds = lemma_a1_probabilities(spec.k, c, delta, spec.log_base()).ok();
    Ok(EventStudy {
        summary: EventSummary {
            schema_version: SCHEMA_VERSION,
            spec: *spec,
            samples,
            seed,
            delta,
            c_k_rule,
            c_k,
            window,
            freq_diam,
            freq_degree_window,
            freq_admissible: freq(&|r| r.admissible),
            se_diam: binomial_se(freq_diam, samples),
            se_degree_window: binomial_se(freq_degree_window, samples),
            bounds,
        },
        rows,
    })
}
