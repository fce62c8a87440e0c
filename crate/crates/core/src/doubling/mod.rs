//! Metric doubling constants of finite spaces and degree/spectral upper bounds for
//! graphs of diameter at most two.
//!
//! The doubling constant `M` is read as the maximum, over every center `x` and
//! radius `r`, of the minimum number of closed `r/2`-balls centered in the space
//! that cover the closed ball `B(x, r)`. Cover sizes are piecewise constant in `r`
//! with breakpoints at `d` and `2d` for each distance `d`, so only those values and
//! the midpoints between consecutive breakpoints are examined.

pub mod set_cover;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{graph_metric, shortest_path_metric, Diameter, FiniteMetric, Graph};
use crate::spectral::{das_kumar_radicand, spectral_radius};
use crate::transport::DiscreteMeasure;

/// Balls with more points than this fall back to the greedy cover.
pub const DEFAULT_EXACT_LIMIT: usize = 18;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoublingError {
    #[error("metric has infinite distances")]
    NonFiniteMetric,
    #[error("diameter {0} exceeds 2")]
    DiameterTooLarge(Diameter),
    #[error("bound needs a non-singleton graph")]
    Singleton,
    #[error("exact limit {0} exceeds the 64-element set-cover universe")]
    ExactLimitTooLarge(usize),
    #[error("measure is not fully supported (point {0} has zero mass)")]
    NotFullySupported(usize),
    #[error("measure has {got} points, metric has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Doubling constant of a ball-cover search.
#[derive(Debug, Clone, PartialEq)]
pub enum CoverCount {
    Exact(usize),
    /// Some ball exceeded the exact limit; only the greedy upper bound is known.
    UpperOnly,
}

impl Serialize for CoverCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CoverCount::Exact(m) => s.serialize_u64(*m as u64),
            CoverCount::UpperOnly => s.serialize_str("upper-only"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub exact_m: CoverCount,
    /// Max over balls of the greedy cover size.
    pub greedy_m: usize,
    /// Max over balls of the best known cover (exact where available).
    pub upper_m: usize,
    pub bound_degree: Option<usize>,
    pub bound_spectral: Option<f64>,
    pub bound_lemma_d2: Option<f64>,
    pub radii_examined: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds_note: Option<String>,
}

impl DoublingReport {
    pub fn exact(&self) -> Option<usize> {
        match self.exact_m {
            CoverCount::Exact(m) => Some(m),
            CoverCount::UpperOnly => None,
        }
    }
}

fn with_midpoints(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mids: Vec<f64> = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    values.extend(mids);
    values.sort_by(f64::total_cmp);
    values
}

/// Breakpoints `{d} ∪ {2d}` plus midpoints of consecutive breakpoints.
pub fn cover_radii(m: &FiniteMetric) -> Vec<f64> {
    let distances = m.distinct_distances();
    let values = distances
        .iter()
        .flat_map(|&d| [d, 2.0 * d])
        .collect();
    with_midpoints(values)
}

/// Breakpoints `{d/2} ∪ {d}` (where `μ(B(v, 2r))` or `μ(B(v, r))` changes) plus midpoints.
fn measure_radii(m: &FiniteMetric) -> Vec<f64> {
    let distances = m.distinct_distances();
    let values = distances.iter().flat_map(|&d| [0.5 * d, d]).collect();
    with_midpoints(values)
}

struct BallCover {
    exact: Option<usize>,
    greedy: usize,
}

fn cover_ball(m: &FiniteMetric, center: usize, r: f64, exact_limit: usize) -> BallCover {
    let members: Vec<usize> = (0..m.k()).filter(|&p| m.dist(center, p) <= r).collect();
    let half = 0.5 * r;
    if members.len() > set_cover::MAX_UNIVERSE || members.len() > exact_limit {
        let greedy = greedy_large_cover(m, &members, half);
        return BallCover {
            exact: None,
            greedy,
        };
    }
    let sets: Vec<u64> = (0..m.k())
        .map(|c| {
            members
                .iter()
                .enumerate()
                .filter(|(_, &p)| m.dist(c, p) <= half)
                .fold(0u64, |acc, (bit, _)| acc | 1 << bit)
        })
        .collect();
    // Every member covers itself, so a cover always exists.
    let greedy = set_cover::greedy_cover(members.len(), &sets).unwrap_or(members.len());
    let exact = set_cover::exact_cover(members.len(), &sets).unwrap_or(members.len());
    BallCover {
        exact: Some(exact),
        greedy,
    }
}

fn greedy_large_cover(m: &FiniteMetric, members: &[usize], half: f64) -> usize {
    let mut uncovered: Vec<bool> = vec![true; members.len()];
    let mut left = members.len();
    let mut used = 0;
    while left > 0 {
        let (best_center, gain) = (0..m.k())
            .map(|c| {
                let gain = members
                    .iter()
                    .zip(&uncovered)
                    .filter(|(&p, &u)| u && m.dist(c, p) <= half)
                    .count();
                (c, gain)
            })
            .max_by_key(|&(_, g)| g)
            .unwrap_or((0, 0));
        if gain == 0 {
            break;
        }
        for (flag, &p) in uncovered.iter_mut().zip(members) {
            if *flag && m.dist(best_center, p) <= half {
                *flag = false;
                left -= 1;
            }
        }
        used += 1;
    }
    used
}

/// Doubling constant of a finite metric by exhaustive ball-cover search.
pub fn exact_doubling_constant(
    m: &FiniteMetric,
    exact_limit: usize,
) -> Result<DoublingReport, DoublingError> {
    if exact_limit > set_cover::MAX_UNIVERSE {
        return Err(DoublingError::ExactLimitTooLarge(exact_limit));
    }
    let radii = cover_radii(m);
    let per_center: Vec<(Option<usize>, usize, usize)> = (0..m.k())
        .into_par_iter()
        .map(|x| {
            let mut exact = Some(1usize);
            let mut greedy = 1usize;
            let mut upper = 1usize;
            for &r in &radii {
                let cover = cover_ball(m, x, r, exact_limit);
                greedy = greedy.max(cover.greedy);
                upper = upper.max(cover.exact.unwrap_or(cover.greedy));
                exact = match (exact, cover.exact) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            (exact, greedy, upper)
        })
        .collect();
    let exact = per_center
        .iter()
        .try_fold(1usize, |acc, &(e, _, _)| e.map(|e| acc.max(e)));
    let greedy_m = per_center.iter().map(|t| t.1).max().unwrap_or(1);
    let upper_m = per_center.iter().map(|t| t.2).max().unwrap_or(1);
    Ok(DoublingReport {
        exact_m: exact.map_or(CoverCount::UpperOnly, CoverCount::Exact),
        greedy_m,
        upper_m,
        bound_degree: None,
        bound_spectral: None,
        bound_lemma_d2: None,
        radii_examined: radii,
        bounds_note: None,
    })
}

/// [`exact_doubling_constant`] on the graph metric, with the degree and spectral
/// bounds attached when the diameter is at most two.
pub fn graph_doubling_report(g: &Graph, exact_limit: usize) -> Result<DoublingReport, DoublingError> {
    let metric = graph_metric(g).map_err(|_| DoublingError::NonFiniteMetric)?;
    let mut report = exact_doubling_constant(&metric, exact_limit)?;
    match degree_doubling_bound(g) {
        Ok(b) => {
            report.bound_degree = Some(b);
            let spectral = spectral_doubling_bound(g)?;
            report.bound_spectral = Some(spectral.b1);
            report.bound_lemma_d2 = spectral.b2;
            if spectral.b2.is_none() {
                report.bounds_note = Some(format!(
                    "degree radicand {} is negative; second spectral bound inapplicable",
                    spectral.radicand
                ));
            }
        }
        Err(e) => report.bounds_note = Some(format!("bounds inapplicable: {e}")),
    }
    Ok(report)
}

fn bounded_diameter(g: &Graph) -> Result<Diameter, DoublingError> {
    if g.k() < 2 {
        return Err(DoublingError::Singleton);
    }
    let diam = shortest_path_metric(g).diameter();
    if !diam.at_most(2.0) {
        return Err(DoublingError::DiameterTooLarge(diam));
    }
    Ok(diam)
}

/// `deg_max + 1`, valid for graphs of diameter at most two.
pub fn degree_doubling_bound(g: &Graph) -> Result<usize, DoublingError> {
    bounded_diameter(g)?;
    let deg_max = (0..g.k()).map(|v| g.degree(v)).max().unwrap_or(0);
    Ok(deg_max + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDoublingBound {
    pub rho: f64,
    /// `(1 + ρ)^4`.
    pub b1: f64,
    /// `8 (1 + radicand)^2`; `None` when the radicand is negative.
    pub b2: Option<f64>,
    pub radicand: f64,
}

pub fn spectral_doubling_bound(g: &Graph) -> Result<SpectralDoublingBound, DoublingError> {
    bounded_diameter(g)?;
    let rho = spectral_radius(g);
    let radicand = das_kumar_radicand(g, g.edge_count());
    Ok(SpectralDoublingBound {
        rho,
        b1: (1.0 + rho).powi(4),
        b2: (radicand >= 0.0).then(|| 8.0 * (1.0 + radicand).powi(2)),
        radicand,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeastMeasureBound {
    /// `1 + ρ(G)`.
    pub upper: f64,
    /// Exact least measure doubling constant, known for complete graphs (`#V`).
    pub exact: Option<usize>,
}

pub fn least_measure_doubling_bound(g: &Graph) -> Result<LeastMeasureBound, DoublingError> {
    let diam = bounded_diameter(g)?;
    Ok(LeastMeasureBound {
        upper: 1.0 + spectral_radius(g),
        exact: (diam == Diameter::Finite(1.0)).then_some(g.k()),
    })
}

/// `sup_{v, r} μ(B(v, 2r)) / μ(B(v, r))` for a fully supported measure.
pub fn measure_doubling_constant(
    m: &FiniteMetric,
    mu: &DiscreteMeasure,
) -> Result<f64, DoublingError> {
    if mu.len() != m.k() {
        return Err(DoublingError::SizeMismatch {
            expected: m.k(),
            got: mu.len(),
        });
    }
    if let Some(i) = mu.weights().iter().position(|&w| w <= 0.0) {
        return Err(DoublingError::NotFullySupported(i));
    }
    let radii = measure_radii(m);
    let ball_mass = |v: usize, r: f64| -> f64 {
        (0..m.k())
            .filter(|&p| m.dist(v, p) <= r)
            .map(|p| mu.weights()[p])
            .sum()
    };
    let mut sup: f64 = 1.0;
    for v in 0..m.k() {
        for &r in &radii {
            sup = sup.max(ball_mass(v, 2.0 * r) / ball_mass(v, r));
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent oracle: every radius in a fine grid, every subset of centers.
    fn brute_force_doubling(m: &FiniteMetric) -> usize {
        let k = m.k();
        let diam = m.diameter();
        let mut best = 1;
        let steps = 400;
        for step in 0..=steps {
            let r = 2.5 * diam * step as f64 / steps as f64;
            for x in 0..k {
                let ball: Vec<usize> = (0..k).filter(|&p| m.dist(x, p) <= r).collect();
                let need = (1..=k)
                    .find(|&size| {
                        (0u32..1 << k).filter(|c| c.count_ones() as usize == size).any(|centers| {
                            ball.iter().all(|&p| {
                                (0..k).any(|c| centers >> c & 1 == 1 && m.dist(c, p) <= r / 2.0)
                            })
                        })
                    })
                    .unwrap_or(k);
                best = best.max(need);
            }
        }
        best
    }

    fn metric(g: &Graph) -> FiniteMetric {
        graph_metric(g).unwrap()
    }

    #[test]
    fn small_graph_constants_match_brute_force() {
        assert_eq!(brute_force_doubling(&metric(&Graph::complete(5))), 5);
        assert_eq!(brute_force_doubling(&metric(&Graph::star(5))), 5);
        for g in [Graph::complete(2), Graph::complete(5), Graph::star(5), Graph::path(4), Graph::cycle(5)] {
            let report = exact_doubling_constant(&metric(&g), DEFAULT_EXACT_LIMIT).unwrap();
            assert_eq!(report.exact(), Some(brute_force_doubling(&metric(&g))), "{g:?}");
            assert!(report.greedy_m >= report.exact().unwrap());
        }
    }

    #[test]
    fn k2_has_doubling_constant_two() {
        let report = exact_doubling_constant(&metric(&Graph::complete(2)), 18).unwrap();
        assert_eq!(report.exact_m, CoverCount::Exact(2));
    }

    #[test]
    fn greedy_fallback_is_flagged() {
        let report = exact_doubling_constant(&metric(&Graph::complete(6)), 3).unwrap();
        assert_eq!(report.exact_m, CoverCount::UpperOnly);
        assert_eq!(report.upper_m, 6);
        assert!(matches!(
            exact_doubling_constant(&metric(&Graph::complete(3)), 65),
            Err(DoublingError::ExactLimitTooLarge(65))
        ));
    }

    #[test]
    fn singleton_metric() {
        let m = FiniteMetric::new(1, vec![0.0]).unwrap();
        assert_eq!(exact_doubling_constant(&m, 18).unwrap().exact(), Some(1));
    }

    #[test]
    fn degree_bounds() {
        assert_eq!(degree_doubling_bound(&Graph::complete(5)), Ok(5));
        assert_eq!(degree_doubling_bound(&Graph::star(5)), Ok(5));
        assert_eq!(
            degree_doubling_bound(&Graph::path(4)),
            Err(DoublingError::DiameterTooLarge(Diameter::Finite(3.0)))
        );
        assert_eq!(degree_doubling_bound(&Graph::empty(1)), Err(DoublingError::Singleton));
    }

    #[test]
    fn spectral_bounds() {
        let b = spectral_doubling_bound(&Graph::complete(2)).unwrap();
        assert_abs_diff_eq!(b.b1, 16.0, epsilon = 1e-9);
        let b = spectral_doubling_bound(&Graph::complete(3)).unwrap();
        assert_abs_diff_eq!(b.b1, 81.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.b2.unwrap(), 8.0 * 25.0, epsilon = 1e-9);
        let b = spectral_doubling_bound(&Graph::star(5)).unwrap();
        assert_abs_diff_eq!(b.b1, 81.0, epsilon = 1e-8);
        assert_eq!(b.b2, None);
        assert_eq!(b.radicand, -5.0);
    }

    #[test]
    fn least_measure_bounds() {
        let k4 = least_measure_doubling_bound(&Graph::complete(4)).unwrap();
        assert_eq!(k4.exact, Some(4));
        assert_abs_diff_eq!(k4.upper, 4.0, epsilon = 1e-9);
        let star = least_measure_doubling_bound(&Graph::star(5)).unwrap();
        assert_abs_diff_eq!(star.upper, 3.0, epsilon = 1e-9);
        assert_eq!(star.exact, None);
        let k2 = least_measure_doubling_bound(&Graph::complete(2)).unwrap();
        assert_eq!(k2.exact, Some(2));
        assert_abs_diff_eq!(k2.upper, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn measure_doubling_examples() {
        for k in 2..8 {
            let c = measure_doubling_constant(&metric(&Graph::complete(k)), &DiscreteMeasure::uniform(k))
                .unwrap();
            assert_abs_diff_eq!(c, k as f64, epsilon = 1e-12);
        }
        let skew = DiscreteMeasure::new(vec![0.9, 0.1]).unwrap();
        let c = measure_doubling_constant(&metric(&Graph::complete(2)), &skew).unwrap();
        assert_abs_diff_eq!(c, 10.0, epsilon = 1e-12);
        let point = FiniteMetric::new(1, vec![0.0]).unwrap();
        assert_eq!(measure_doubling_constant(&point, &DiscreteMeasure::uniform(1)), Ok(1.0));
        let partial = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            measure_doubling_constant(&metric(&Graph::complete(2)), &partial),
            Err(DoublingError::NotFullySupported(1))
        );
    }

    #[test]
    fn graph_report_marks_inapplicable_bounds() {
        let report = graph_doubling_report(&Graph::path(4), 18).unwrap();
        assert_eq!(report.bound_degree, None);
        assert!(report.bounds_note.unwrap().contains("inapplicable"));
        let report = graph_doubling_report(&Graph::star(5), 18).unwrap();
        assert_eq!(report.exact(), Some(5));
        assert_eq!(report.bound_degree, Some(5));
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(graph_doubling_report(&split, 18), Err(DoublingError::NonFiniteMetric));
    }
}
