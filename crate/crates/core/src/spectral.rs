//! Normalized Laplacians, adjacency spectra and the Gershgorin operator-norm bound.
//!
//! Eigenvalues come from cyclic Jacobi rotations up to [`JACOBI_LIMIT`] rows and
//! from shifted power iteration above that. Both paths are deterministic.

use thiserror::Error;

use crate::graph::Graph;

/// Largest order handled by the dense Jacobi solver.
pub const JACOBI_LIMIT: usize = 256;

/// Symmetry tolerance for [`SymmetricMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;
const POWER_MAX_ITERS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("need at least two vertices")]
    TooFewVertices,
    #[error("radius bound radicand is negative ({0})")]
    NegativeRadicand(f64),
    #[error("matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("matrix has {got} entries, expected {expected}")]
    BadShape { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, SpectralError> {
        if data.len() != n * n {
            return Err(SpectralError::BadShape {
                expected: n * n,
                got: data.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (data[i * n + j] - data[j * n + i]).abs() > SYMMETRY_TOL {
                    return Err(SpectralError::NotSymmetric(i, j));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub(crate) fn from_trusted(n: usize, data: Vec<f64>) -> Self {
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, other: &SymmetricMatrix) -> Vec<f64> {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.get(l, j);
                }
            }
        }
        out
    }

    /// `self^t` by repeated multiplication, re-symmetrized after each step.
    pub fn power(&self, t: u32) -> SymmetricMatrix {
        let mut acc = SymmetricMatrix::identity(self.n);
        for _ in 0..t {
            let prod = acc.matmul(self);
            acc = symmetrize(self.n, prod);
        }
        acc
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.data[i * self.n..(i + 1) * self.n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// All eigenvalues in ascending order (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values = jacobi_eigenvalues(self.n, self.data.clone());
        values.sort_by(f64::total_cmp);
        values
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        if self.n <= JACOBI_LIMIT {
            return self.eigenvalues().iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        // Power iteration on the square: its top eigenvalue is the squared norm.
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * i as f64 / n as f64).collect();
        normalize(&mut x);
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut estimate = 0.0;
        for _ in 0..POWER_MAX_ITERS {
            self.apply(&x, &mut y);
            let next = norm(&y);
            if next == 0.0 {
                return 0.0;
            }
            self.apply(&y, &mut z);
            x.copy_from_slice(&z);
            normalize(&mut x);
            if (next - estimate).abs() <= 1e-14 * next {
                return next;
            }
            estimate = next;
        }
        estimate
    }

    /// Largest (algebraic) eigenvalue.
    pub fn max_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        if self.n <= JACOBI_LIMIT {
            return self.eigenvalues().last().copied().unwrap_or(0.0);
        }
        // Shift by the Gershgorin radius so the spectrum is nonnegative and the
        // top eigenvalue dominates in magnitude.
        let shift = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.get(i, j).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let n = self.n;
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut y = vec![0.0; n];
        let mut estimate = f64::NEG_INFINITY;
        for _ in 0..POWER_MAX_ITERS {
            self.apply(&x, &mut y);
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += shift * xi;
            }
            let rayleigh: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
            let nrm = norm(&y);
            if nrm == 0.0 {
                return -shift;
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / nrm;
            }
            if (rayleigh - estimate).abs() <= 1e-14 * rayleigh.abs().max(1.0) {
                return rayleigh - shift;
            }
            estimate = rayleigh;
        }
        estimate - shift
    }
}

fn symmetrize(n: usize, data: Vec<f64>) -> SymmetricMatrix {
    let mut out = data.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
            out[i * n + j] = avg;
            out[j * n + i] = avg;
        }
    }
    SymmetricMatrix::from_trusted(n, out)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) {
    let nrm = norm(x);
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

/// Cyclic Jacobi rotations on a dense symmetric matrix; returns the diagonal.
fn jacobi_eigenvalues(n: usize, mut a: Vec<f64>) -> Vec<f64> {
    let total: f64 = a.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

pub fn adjacency_matrix(g: &Graph) -> SymmetricMatrix {
    let k = g.k();
    let mut data = vec![0.0; k * k];
    for (u, v) in g.edges() {
        data[u * k + v] = 1.0;
        data[v * k + u] = 1.0;
    }
    SymmetricMatrix::from_trusted(k, data)
}

fn first_isolated(g: &Graph) -> Option<usize> {
    (0..g.k()).find(|&v| g.degree(v) == 0)
}

/// `I - D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(g: &Graph) -> Result<SymmetricMatrix, SpectralError> {
    if let Some(v) = first_isolated(g) {
        return Err(SpectralError::IsolatedVertex(v));
    }
    let k = g.k();
    let inv_sqrt: Vec<f64> = (0..k).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
    let mut data = vec![0.0; k * k];
    for v in 0..k {
        data[v * k + v] = 1.0;
    }
    for (u, v) in g.edges() {
        let w = -inv_sqrt[u] * inv_sqrt[v];
        data[u * k + v] = w;
        data[v * k + u] = w;
    }
    Ok(SymmetricMatrix::from_trusted(k, data))
}

pub fn operator_norm(m: &SymmetricMatrix) -> f64 {
    m.operator_norm()
}

/// `1 + sqrt(k - 1) / sqrt(deg_min)`, an upper bound on the Laplacian's operator norm.
pub fn gershgorin_bound(g: &Graph) -> Result<f64, SpectralError> {
    if g.k() < 2 {
        return Err(SpectralError::TooFewVertices);
    }
    if let Some(v) = first_isolated(g) {
        return Err(SpectralError::IsolatedVertex(v));
    }
    let deg_min = (0..g.k()).map(|v| g.degree(v)).min().unwrap_or(0);
    Ok(1.0 + ((g.k() - 1) as f64).sqrt() / (deg_min as f64).sqrt())
}

/// Largest adjacency eigenvalue.
pub fn spectral_radius(g: &Graph) -> f64 {
    if g.edge_count() == 0 {
        return 0.0;
    }
    adjacency_matrix(g).max_eigenvalue().max(0.0)
}

/// Radicand `2 k_E - (k - 1) deg_max + (deg_max - 1) deg_min` of the degree-based
/// spectral radius bound.
pub fn das_kumar_radicand(g: &Graph, edge_count: usize) -> f64 {
    let k = g.k() as f64;
    let deg: Vec<usize> = (0..g.k()).map(|v| g.degree(v)).collect();
    let dmax = deg.iter().copied().max().unwrap_or(0) as f64;
    let dmin = deg.iter().copied().min().unwrap_or(0) as f64;
    2.0 * edge_count as f64 - (k - 1.0) * dmax + (dmax - 1.0) * dmin
}

/// Square root of [`das_kumar_radicand`]; errors instead of producing NaN.
pub fn das_kumar_radius_bound(g: &Graph, edge_count: usize) -> Result<f64, SpectralError> {
    if !g.is_connected() {
        return Err(SpectralError::Disconnected);
    }
    let radicand = das_kumar_radicand(g, edge_count);
    if radicand < 0.0 {
        return Err(SpectralError::NegativeRadicand(radicand));
    }
    Ok(radicand.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laplacian_of_k2() {
        let l = normalized_laplacian(&Graph::complete(2)).unwrap();
        assert_eq!(l.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
        assert_abs_diff_eq!(l.operator_norm(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_of_k3_spectrum() {
        let l = normalized_laplacian(&Graph::complete(3)).unwrap();
        assert_abs_diff_eq!(l.get(0, 1), -0.5);
        let ev = l.eigenvalues();
        for (got, want) in ev.iter().zip([0.0, 1.5, 1.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn isolated_vertex_is_rejected() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        assert_eq!(normalized_laplacian(&g), Err(SpectralError::IsolatedVertex(2)));
        assert_eq!(gershgorin_bound(&g), Err(SpectralError::IsolatedVertex(2)));
    }

    #[test]
    fn operator_norm_basics() {
        assert_abs_diff_eq!(SymmetricMatrix::identity(3).operator_norm(), 1.0, epsilon = 1e-14);
        assert_eq!(SymmetricMatrix::zeros(3).operator_norm(), 0.0);
        let neg = SymmetricMatrix::new(2, vec![-3.0, 0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(neg.operator_norm(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gershgorin_values() {
        assert_abs_diff_eq!(gershgorin_bound(&Graph::complete(2)).unwrap(), 2.0);
        assert_abs_diff_eq!(gershgorin_bound(&Graph::complete(5)).unwrap(), 2.0);
        assert_abs_diff_eq!(gershgorin_bound(&Graph::star(5)).unwrap(), 3.0);
    }

    #[test]
    fn spectral_radius_values() {
        for k in 2..9 {
            assert_abs_diff_eq!(
                spectral_radius(&Graph::complete(k)),
                (k - 1) as f64,
                epsilon = 1e-9
            );
        }
        assert_abs_diff_eq!(spectral_radius(&Graph::star(5)), 2.0, epsilon = 1e-10);
        assert_eq!(spectral_radius(&Graph::empty(4)), 0.0);
    }

    #[test]
    fn das_kumar_examples() {
        assert_abs_diff_eq!(das_kumar_radius_bound(&Graph::complete(3), 3).unwrap(), 2.0);
        assert_abs_diff_eq!(das_kumar_radius_bound(&Graph::complete(2), 1).unwrap(), 1.0);
        assert_eq!(
            das_kumar_radius_bound(&Graph::star(5), 4),
            Err(SpectralError::NegativeRadicand(-5.0))
        );
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(das_kumar_radius_bound(&split, 2), Err(SpectralError::Disconnected));
    }

    #[test]
    fn power_iteration_above_jacobi_limit() {
        let n = JACOBI_LIMIT + 44;
        assert_abs_diff_eq!(spectral_radius(&Graph::complete(n)), (n - 1) as f64, epsilon = 1e-8);
        let star = Graph::star(n);
        assert_abs_diff_eq!(spectral_radius(&star), ((n - 1) as f64).sqrt(), epsilon = 1e-9);
        // Star Laplacian spectrum is {0, 1, 2}.
        let l = normalized_laplacian(&star).unwrap();
        assert_abs_diff_eq!(l.operator_norm(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn laplacian_power_is_repeated_product() {
        let l = normalized_laplacian(&Graph::path(4)).unwrap();
        let l2 = l.power(2);
        let manual = l.matmul(&l);
        for (a, b) in l2.as_slice().iter().zip(&manual) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
        assert_eq!(l.power(0), SymmetricMatrix::identity(4));
    }
}
