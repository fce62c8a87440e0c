//! Snowflake metrics and bi-Lipschitz embeddings into `(ℝ^m, ‖·‖∞)`.
//!
//! Distortion is reported as `expansion × contraction`, where expansion is the
//! largest ratio `‖φx − φy‖∞ / d(x, y)` and contraction the largest inverse ratio.
//! The product is invariant under scaling of the coordinates.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{FiniteMetric, METRIC_TOL};

/// Orderings are searched exhaustively up to this many points.
pub const EXHAUSTIVE_ORDER_LIMIT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("alpha {0} outside (0, 1]")]
    BadAlpha(f64),
    #[error("minimum distance {0} is below 1")]
    MinDistanceBelowOne(f64),
    #[error("eta {0} outside (0, 1)")]
    BadEta(f64),
    #[error("doubling constant {0} must be at least 2")]
    BadDoubling(u64),
    #[error("absolute constant {0} must be at least 1")]
    BadConstant(f64),
    #[error("dimension {0:e} does not fit in 64 bits")]
    DimensionOverflow(f64),
    #[error("points {0} and {1} map to the same coordinates")]
    CollapsedPair(usize, usize),
    #[error("embedding has {got} points, metric has {expected}")]
    PointCountMismatch { expected: usize, got: usize },
    #[error("points have inconsistent dimensions")]
    RaggedCoordinates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distortion {
    pub expansion: f64,
    pub contraction: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub dim: usize,
    pub coords: Vec<Vec<f64>>,
    pub expansion: f64,
    pub contraction: f64,
    pub distortion: f64,
    /// A priori distortion guarantee of the construction, when one exists.
    pub certified_bound: Option<f64>,
}

impl Embedding {
    fn measured(source: &FiniteMetric, coords: Vec<Vec<f64>>, certified_bound: Option<f64>) -> Result<Self, EmbeddingError> {
        let d = measure_distortion(source, &coords)?;
        Ok(Self {
            dim: coords.first().map_or(0, Vec::len),
            coords,
            expansion: d.expansion,
            contraction: d.contraction,
            distortion: d.distortion,
            certified_bound,
        })
    }
}

/// `d^α` entrywise; a metric for every `α ∈ (0, 1]`.
pub fn snowflake(m: &FiniteMetric, alpha: f64) -> Result<FiniteMetric, EmbeddingError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(EmbeddingError::BadAlpha(alpha));
    }
    if alpha == 1.0 {
        return Ok(m.clone());
    }
    let dist = m.as_slice().iter().map(|d| d.powf(alpha)).collect();
    Ok(FiniteMetric::from_trusted(m.k(), dist))
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Expansion, contraction and distortion of `coords` as a map out of `source`.
pub fn measure_distortion(source: &FiniteMetric, coords: &[Vec<f64>]) -> Result<Distortion, EmbeddingError> {
    if coords.len() != source.k() {
        return Err(EmbeddingError::PointCountMismatch {
            expected: source.k(),
            got: coords.len(),
        });
    }
    if let Some(first) = coords.first() {
        if coords.iter().any(|c| c.len() != first.len()) {
            return Err(EmbeddingError::RaggedCoordinates);
        }
    }
    let mut expansion: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            let image = sup_distance(&coords[i], &coords[j]);
            if image == 0.0 {
                return Err(EmbeddingError::CollapsedPair(i, j));
            }
            let d = source.dist(i, j);
            expansion = expansion.max(image / d);
            contraction = contraction.max(d / image);
        }
    }
    if coords.len() < 2 {
        expansion = 1.0;
        contraction = 1.0;
    }
    Ok(Distortion {
        expansion,
        contraction,
        distortion: expansion * contraction,
    })
}

/// Isometric embedding `x_j ↦ (d(x_j, x_i))_i` into `ℓ∞^k`.
pub fn frechet_embed(m: &FiniteMetric) -> Embedding {
    let coords: Vec<Vec<f64>> = (0..m.k()).map(|j| m.row(j).to_vec()).collect();
    Embedding::measured(m, coords, Some(1.0)).expect("rows of a metric are distinct")
}

/// `12 k diam^{1/2}`, the distortion guarantee of [`line_embed_snowflake`].
pub fn line_embedding_certificate(m: &FiniteMetric) -> f64 {
    12.0 * m.k() as f64 * m.diameter().sqrt()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn ordering_distortion(snow: &FiniteMetric, order: &[usize]) -> f64 {
    let mut expansion: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            let gap = (b - a) as f64;
            let d = snow.dist(order[a], order[b]);
            expansion = expansion.max(gap / d);
            contraction = contraction.max(d / gap);
        }
    }
    expansion * contraction
}

/// One-dimensional embedding of `(X, d^{1/2})` on an evenly spaced grid with step
/// `diam^{1/2}`.
///
/// Snowflaked distances lie in `[1, diam^{1/2}]`, so any ordering has distortion at
/// most `(k − 1) diam^{1/2}`. Small spaces get the best ordering by exhaustive search.
pub fn line_embed_snowflake(m: &FiniteMetric) -> Result<Embedding, EmbeddingError> {
    if let Some(min) = m.min_distance() {
        if min < 1.0 - METRIC_TOL {
            return Err(EmbeddingError::MinDistanceBelowOne(min));
        }
    }
    let snow = snowflake(m, 0.5)?;
    let k = m.k();
    let mut order: Vec<usize> = (0..k).collect();
    if k <= EXHAUSTIVE_ORDER_LIMIT {
        let mut best = order.clone();
        let mut best_value = ordering_distortion(&snow, &order);
        while next_permutation(&mut order) {
            // Reversals give the same distortion; skip them.
            if order.first() > order.last() {
                continue;
            }
            let value = ordering_distortion(&snow, &order);
            if value < best_value {
                best_value = value;
                best.clone_from(&order);
            }
        }
        order = best;
    }
    let step = m.diameter().sqrt().max(1.0);
    let mut coords = vec![Vec::new(); k];
    for (slot, &point) in order.iter().enumerate() {
        coords[point] = vec![slot as f64 * step];
    }
    Embedding::measured(&snow, coords, Some(line_embedding_certificate(m)))
}

/// Round-to-integer ceiling that ignores floating error within a relative `1e-9`.
pub fn tolerant_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Target dimension of the low- and high-distortion Assouad-type embeddings of a
/// doubling space with constant `doubling_m`.
///
/// `η ≤ 1/20` gives `⌈4 M^{5 + log₂ 5}⌉`; larger `η` gives `⌈η^{−C log₂ M}⌉`, which
/// equals 2 once `η ≥ 2^{−1/(C log₂ M)}`.
pub fn assouad_dimension_calculator(eta: f64, doubling_m: u64, c_abs: f64) -> Result<u64, EmbeddingError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(EmbeddingError::BadEta(eta));
    }
    if doubling_m < 2 {
        return Err(EmbeddingError::BadDoubling(doubling_m));
    }
    if !(1.0..f64::INFINITY).contains(&c_abs) {
        return Err(EmbeddingError::BadConstant(c_abs));
    }
    let m = doubling_m as f64;
    let value = if eta <= 1.0 / 20.0 {
        tolerant_ceil(4.0 * m.powf(5.0 + 5f64.log2()))
    } else {
        let exponent = c_abs * m.log2();
        if eta >= 2f64.powf(-1.0 / exponent) {
            2.0
        } else {
            tolerant_ceil(eta.powf(-exponent))
        }
    };
    if !value.is_finite() || value >= u64::MAX as f64 {
        return Err(EmbeddingError::DimensionOverflow(value));
    }
    Ok(value as u64)
}
