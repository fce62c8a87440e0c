//! Discrete probability measures and exact Hölder Wasserstein distances.
//!
//! `W_α(μ, ν)` is the optimal transport cost under `d^α`, solved exactly with a
//! transportation network simplex. The returned potentials `f` are `1`-Lipschitz for
//! `d^α` and satisfy `W_α = Σ f (μ − ν)`, which certifies optimality.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::FiniteMetric;

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance on the Hölder constraint of a dual candidate.
pub const DUAL_TOL: f64 = 1e-9;
/// Reduced costs above `-PIVOT_TOL` count as nonnegative.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("measure has no points")]
    Empty,
    #[error("weight {index} is {value}; weights must be finite and nonnegative")]
    BadWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, not 1")]
    BadTotal(f64),
    #[error("measure has {got} points, metric has {expected}")]
    MarginalMismatch { expected: usize, got: usize },
    #[error("alpha {0} outside (0, 1]")]
    BadAlpha(f64),
    #[error("potential violates the Hölder constraint at ({i}, {j}) by {excess}")]
    InfeasibleDual { i: usize, j: usize, excess: f64 },
    #[error("empirical measure needs at least one draw")]
    NoDraws,
    #[error("network simplex did not converge in {0} pivots")]
    NoConvergence(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self, TransportError> {
        if weights.is_empty() {
            return Err(TransportError::Empty);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(TransportError::BadWeight { index, value });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(TransportError::BadTotal(total));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform measure on zero points");
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn dirac(k: usize, at: usize) -> Self {
        assert!(at < k, "dirac point out of range");
        let mut weights = vec![0.0; k];
        weights[at] = 1.0;
        Self { weights }
    }

    /// `counts / Σ counts`.
    pub fn from_counts(counts: &[usize]) -> Result<Self, TransportError> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(TransportError::NoDraws);
        }
        Ok(Self {
            weights: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_i w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum()
    }
}

/// Empirical measure of `n` i.i.d. draws from `base`, seeded.
pub fn empirical_measure(
    base: &DiscreteMeasure,
    n: usize,
    seed: u64,
) -> Result<DiscreteMeasure, TransportError> {
    empirical_measure_with_rng(base, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn empirical_measure_with_rng<R: Rng + ?Sized>(
    base: &DiscreteMeasure,
    n: usize,
    rng: &mut R,
) -> Result<DiscreteMeasure, TransportError> {
    if n == 0 {
        return Err(TransportError::NoDraws);
    }
    let dist = WeightedIndex::new(base.weights()).map_err(|_| TransportError::BadTotal(0.0))?;
    let mut counts = vec![0usize; base.len()];
    for _ in 0..n {
        counts[dist.sample(rng)] += 1;
    }
    DiscreteMeasure::from_counts(&counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transport {
    pub value: f64,
    /// Row-major `k × k`; row sums are `μ`, column sums are `ν`.
    pub plan: Vec<f64>,
    /// `f` with `|f_i − f_j| ≤ d_ij^α` and `Σ f (μ − ν) = value`.
    pub potentials: Vec<f64>,
}

fn check_alpha(alpha: f64) -> Result<(), TransportError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(TransportError::BadAlpha(alpha))
    }
}

fn check_size(metric: &FiniteMetric, m: &DiscreteMeasure) -> Result<(), TransportError> {
    if m.len() == metric.k() {
        Ok(())
    } else {
        Err(TransportError::MarginalMismatch {
            expected: metric.k(),
            got: m.len(),
        })
    }
}

fn cost_matrix(metric: &FiniteMetric, alpha: f64) -> Vec<f64> {
    if alpha == 1.0 {
        metric.as_slice().to_vec()
    } else {
        metric.as_slice().iter().map(|d| d.powf(alpha)).collect()
    }
}

/// Exact `W_α(μ, ν)` on `metric`.
pub fn wasserstein(
    metric: &FiniteMetric,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    alpha: f64,
) -> Result<Transport, TransportError> {
    check_alpha(alpha)?;
    check_size(metric, mu)?;
    check_size(metric, nu)?;
    let k = metric.k();
    let cost = cost_matrix(metric, alpha);
    let rows: Vec<usize> = (0..k).filter(|&i| mu.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..k).filter(|&j| nu.weights()[j] > 0.0).collect();
    let supply: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| nu.weights()[j]).collect();
    let sub_cost: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
        .map(|(i, j)| cost[i * k + j])
        .collect();
    let solution = network_simplex(&supply, &demand, &sub_cost)?;

    let mut plan = vec![0.0; k * k];
    for (&(r, c), &x) in solution.basis.iter().zip(&solution.flow) {
        plan[rows[r] * k + cols[c]] = x;
    }
    let value = plan.iter().zip(&cost).map(|(x, c)| x * c).sum();
    // c-transform of the column potentials over the support of ν.
    let potentials: Vec<f64> = (0..k)
        .map(|x| {
            cols.iter()
                .zip(&solution.v)
                .map(|(&j, &vj)| cost[x * k + j] - vj)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(Transport {
        value,
        plan,
        potentials,
    })
}

/// `Σ f (μ − ν)` for a dual candidate `f` satisfying `|f_i − f_j| ≤ d_ij^α`.
pub fn wasserstein_dual_value(
    metric: &FiniteMetric,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    alpha: f64,
    f: &[f64],
) -> Result<f64, TransportError> {
    check_alpha(alpha)?;
    check_size(metric, mu)?;
    check_size(metric, nu)?;
    let k = metric.k();
    if f.len() != k {
        return Err(TransportError::MarginalMismatch {
            expected: k,
            got: f.len(),
        });
    }
    for i in 0..k {
        for j in i + 1..k {
            let excess = (f[i] - f[j]).abs() - metric.dist(i, j).powf(alpha);
            if excess > DUAL_TOL {
                return Err(TransportError::InfeasibleDual { i, j, excess });
            }
        }
    }
    Ok(mu.integrate(f) - nu.integrate(f))
}

struct SimplexSolution {
    basis: Vec<(usize, usize)>,
    flow: Vec<f64>,
    v: Vec<f64>,
}

/// Transportation simplex on an `m × n` cost matrix with balanced positive marginals.
///
/// North-west corner start, Bland's rule for both entering and leaving cells.
fn network_simplex(
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
) -> Result<SimplexSolution, TransportError> {
    let (m, n) = (supply.len(), demand.len());
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    let mut flow: Vec<f64> = Vec::with_capacity(m + n - 1);
    let (mut a, mut b) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = a[i].min(b[j]);
        basis.push((i, j));
        flow.push(x);
        a[i] -= x;
        b[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }

    let max_pivots = 50 * (m + n) * (m + n) + 1000;
    for _ in 0..max_pivots {
        let (u, v) = basis_potentials(m, n, &basis, cost);
        let entering = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| cost[i * n + j] - u[i] - v[j] < -PIVOT_TOL);
        let Some((ei, ej)) = entering else {
            return Ok(SimplexSolution { basis, flow, v });
        };
        // Tree path from column ej back to row ei closes the cycle.
        let path = tree_path(m, n, &basis, ej, ei);
        let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
        let theta = minus
            .iter()
            .map(|&c| flow[c])
            .fold(f64::INFINITY, f64::min);
        let leaving = *minus
            .iter()
            .filter(|&&c| flow[c] <= theta)
            .min_by_key(|&&c| basis[c])
            .expect("cycle has a minus cell");
        for (pos, &c) in path.iter().enumerate() {
            if pos % 2 == 0 {
                flow[c] = (flow[c] - theta).max(0.0);
            } else {
                flow[c] += theta;
            }
        }
        basis[leaving] = (ei, ej);
        flow[leaving] = theta;
    }
    Err(TransportError::NoConvergence(max_pivots))
}

/// Node ids: rows `0..m`, columns `m..m+n`.
fn adjacency(m: usize, n: usize, basis: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); m + n];
    for (c, &(i, j)) in basis.iter().enumerate() {
        adj[i].push((m + j, c));
        adj[m + j].push((i, c));
    }
    adj
}

fn basis_potentials(
    m: usize,
    n: usize,
    basis: &[(usize, usize)],
    cost: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let adj = adjacency(m, n, basis);
    let mut pot = vec![f64::NAN; m + n];
    pot[0] = 0.0;
    let mut stack = vec![0];
    while let Some(node) = stack.pop() {
        for &(next, c) in &adj[node] {
            if pot[next].is_nan() {
                let (i, j) = basis[c];
                pot[next] = cost[i * n + j] - pot[node];
                stack.push(next);
            }
        }
    }
    let v = pot.split_off(m);
    (pot, v)
}

/// Basis cells along the tree path from column `col` to row `row`, in order.
fn tree_path(m: usize, n: usize, basis: &[(usize, usize)], col: usize, row: usize) -> Vec<usize> {
    let adj = adjacency(m, n, basis);
    let start = m + col;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == row {
            break;
        }
        for &(next, c) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, c));
                queue.push_back(next);
            }
        }
    }
    let mut cells = Vec::new();
    let mut node = row;
    while let Some((prev, c)) = parent[node] {
        cells.push(c);
        node = prev;
    }
    cells.reverse();
    cells
}
