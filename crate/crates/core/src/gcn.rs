//! Generalized graph convolutional networks and their Lipschitz constants.
//!
//! Hidden layers compute `H_l = σ(W_l H_{l−1} Δ^t)` with `Δ` the normalized
//! Laplacian; the last layer is linear, `f(G, x) = W_L H_{L−1}`. Features are
//! `d_in × k` (one column per node) and `W_l` is `d_l × d_{l−1}`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{shortest_path_metric, Graph, Hops};
use crate::linalg::Matrix;
use crate::spectral::{normalized_laplacian, SpectralError, SymmetricMatrix};

pub const SCHEMA_VERSION: u32 = 1;
/// Slack on `‖W_l‖_op ≤ β_l`.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GcnError {
    #[error("invalid network: {0}")]
    BadSpec(String),
    #[error("layer {layer} has operator norm {norm} above its budget {beta}")]
    NormBudgetExceeded { layer: usize, norm: f64, beta: f64 },
    #[error("unknown activation {0:?}")]
    UnknownActivation(String),
    #[error("activation Lipschitz constant {0} exceeds 1")]
    ActivationNotContractive(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("invalid network JSON: {0}")]
    Json(String),
}

impl From<SpectralError> for GcnError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::IsolatedVertex(v) => GcnError::IsolatedVertex(v),
            other => GcnError::BadParams(other.to_string()),
        }
    }
}

/// A user-supplied activation with a declared Lipschitz constant.
#[derive(Clone)]
pub struct CustomActivation {
    pub name: String,
    pub lipschitz: f64,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

#[derive(Clone)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
    Abs,
    Custom(CustomActivation),
}

impl Activation {
    pub fn custom(
        name: impl Into<String>,
        lipschitz: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, GcnError> {
        if !(0.0..=1.0).contains(&lipschitz) {
            return Err(GcnError::ActivationNotContractive(lipschitz));
        }
        Ok(Activation::Custom(CustomActivation {
            name: name.into(),
            lipschitz,
            f: Arc::new(f),
        }))
    }

    pub fn name(&self) -> &str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
            Activation::Abs => "abs",
            Activation::Custom(c) => &c.name,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
            Activation::Abs => x.abs(),
            Activation::Custom(c) => (c.f)(x),
        }
    }

    /// `σ(c x) = c σ(x)` for `c > 0`.
    pub fn is_positively_homogeneous(&self) -> bool {
        matches!(self, Activation::Relu | Activation::Identity | Activation::Abs)
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Activation::Custom(a), Activation::Custom(b)) => Arc::ptr_eq(&a.f, &b.f),
            (Activation::Custom(_), _) | (_, Activation::Custom(_)) => false,
            _ => self.name() == other.name(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = GcnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            "abs" => Ok(Activation::Abs),
            other => Err(GcnError::UnknownActivation(other.to_string())),
        }
    }
}

impl Serialize for Activation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnSpec {
    layers: usize,
    t: u32,
    dims: Vec<usize>,
    activation: Activation,
    betas: Vec<f64>,
    weights: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
struct GcnJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema_version: Option<u32>,
    #[serde(rename = "L")]
    layers: usize,
    t: u32,
    dims: Vec<usize>,
    activation: String,
    betas: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

impl GcnSpec {
    /// Validates shapes and the norm budgets `‖W_l‖_op ≤ β_l`.
    pub fn new(
        t: u32,
        dims: Vec<usize>,
        activation: Activation,
        betas: Vec<f64>,
        weights: Vec<Matrix>,
    ) -> Result<Self, GcnError> {
        let layers = weights.len();
        if layers == 0 {
            return Err(GcnError::BadSpec("at least one layer is required".into()));
        }
        if t == 0 {
            return Err(GcnError::BadSpec("hop count t must be at least 1".into()));
        }
        if dims.len() != layers + 1 {
            return Err(GcnError::BadSpec(format!(
                "{} widths given for {layers} layers",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(GcnError::BadSpec("layer widths must be positive".into()));
        }
        if dims[layers] != 1 {
            return Err(GcnError::BadSpec("output width must be 1".into()));
        }
        if betas.len() != layers {
            return Err(GcnError::BadSpec(format!(
                "{} budgets given for {layers} layers",
                betas.len()
            )));
        }
        if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(GcnError::BadSpec(format!("budget {b} must be finite and nonnegative")));
        }
        for (l, w) in weights.iter().enumerate() {
            if (w.rows(), w.cols()) != (dims[l + 1], dims[l]) {
                return Err(GcnError::ShapeMismatch(format!(
                    "layer {} weight is {}x{}, expected {}x{}",
                    l + 1,
                    w.rows(),
                    w.cols(),
                    dims[l + 1],
                    dims[l]
                )));
            }
            if w.as_slice().iter().any(|x| !x.is_finite()) {
                return Err(GcnError::BadSpec(format!("layer {} has non-finite weights", l + 1)));
            }
            let norm = w.operator_norm();
            if norm > betas[l] + NORM_TOL {
                return Err(GcnError::NormBudgetExceeded {
                    layer: l + 1,
                    norm,
                    beta: betas[l],
                });
            }
        }
        Ok(Self {
            layers,
            t,
            dims,
            activation,
            betas,
            weights,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GcnError> {
        let raw: GcnJson = serde_json::from_str(text).map_err(|e| GcnError::Json(e.to_string()))?;
        if raw.layers != raw.weights.len() {
            return Err(GcnError::BadSpec(format!(
                "L = {} but {} weight matrices given",
                raw.layers,
                raw.weights.len()
            )));
        }
        if raw.dims.len() != raw.layers + 1 {
            return Err(GcnError::BadSpec(format!(
                "{} widths given for {} layers",
                raw.dims.len(),
                raw.layers
            )));
        }
        let weights = raw
            .weights
            .into_iter()
            .enumerate()
            .map(|(l, flat)| {
                let (rows, cols) = (raw.dims[l + 1], raw.dims[l]);
                let len = flat.len();
                Matrix::from_row_major(rows, cols, flat).ok_or_else(|| {
                    GcnError::ShapeMismatch(format!(
                        "layer {} has {len} entries, expected {rows}x{cols}",
                        l + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(raw.t, raw.dims, raw.activation.parse()?, raw.betas, weights)
    }

    pub fn to_json(&self) -> String {
        let raw = GcnJson {
            schema_version: Some(SCHEMA_VERSION),
            layers: self.layers,
            t: self.t,
            dims: self.dims.clone(),
            activation: self.activation.name().to_string(),
            betas: self.betas.clone(),
            weights: self.weights.iter().map(|w| w.as_slice().to_vec()).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("network serializes")
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn d_in(&self) -> usize {
        self.dims[0]
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn beta_product(&self) -> f64 {
        self.betas.iter().product()
    }

    /// Same widths, hop count, activation and budgets.
    pub fn same_class(&self, other: &GcnSpec) -> bool {
        self.t == other.t
            && self.dims == other.dims
            && self.activation == other.activation
            && self.betas == other.betas
    }

    /// Every weight multiplied by `c`, with budgets scaled by `|c|`.
    pub fn scaled(&self, c: f64) -> GcnSpec {
        GcnSpec {
            layers: self.layers,
            t: self.t,
            dims: self.dims.clone(),
            activation: self.activation.clone(),
            betas: self.betas.iter().map(|b| b * c.abs()).collect(),
            weights: self.weights.iter().map(|w| w.scale(c)).collect(),
        }
    }
}

impl Serialize for GcnSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GcnJson {
            schema_version: Some(SCHEMA_VERSION),
            layers: self.layers,
            t: self.t,
            dims: self.dims.clone(),
            activation: self.activation.name().to_string(),
            betas: self.betas.clone(),
            weights: self.weights.iter().map(|w| w.as_slice().to_vec()).collect(),
        }
        .serialize(s)
    }
}

/// Node features, one column per node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMatrix {
    values: Matrix,
}

impl FeatureMatrix {
    pub fn new(values: Matrix) -> Result<Self, GcnError> {
        if values.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(GcnError::BadParams("features must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(d_in: usize, k: usize) -> Self {
        Self {
            values: Matrix::zeros(d_in, k),
        }
    }

    /// Entries uniform in `[-bound, bound]`.
    pub fn random<R: Rng + ?Sized>(d_in: usize, k: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..d_in * k).map(|_| rng.gen_range(-bound..=bound)).collect();
        Self {
            values: Matrix::from_row_major(d_in, k, data).expect("shape matches"),
        }
    }

    pub fn d_in(&self) -> usize {
        self.values.rows()
    }

    pub fn k(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Largest absolute entry; the sup-norm on the product feature space.
    pub fn max_abs(&self) -> f64 {
        self.values.max_abs()
    }
}

/// Cached `Δ_G^t` for repeated forward passes on one graph.
#[derive(Debug, Clone)]
pub struct Propagator {
    t: u32,
    matrix: Matrix,
}

impl Propagator {
    pub fn new(g: &Graph, t: u32) -> Result<Self, GcnError> {
        let power = normalized_laplacian(g)?.power(t);
        Ok(Self::from_symmetric(t, &power))
    }

    fn from_symmetric(t: u32, m: &SymmetricMatrix) -> Self {
        let n = m.n();
        Self {
            t,
            matrix: Matrix::from_row_major(n, n, m.as_slice().to_vec()).expect("square"),
        }
    }

    pub fn k(&self) -> usize {
        self.matrix.rows()
    }

    pub fn t(&self) -> u32 {
        self.t
    }
}

pub fn forward(spec: &GcnSpec, g: &Graph, x: &FeatureMatrix) -> Result<Vec<f64>, GcnError> {
    let prop = Propagator::new(g, spec.t())?;
    forward_with(spec, &prop, x)
}

pub fn forward_with(spec: &GcnSpec, prop: &Propagator, x: &FeatureMatrix) -> Result<Vec<f64>, GcnError> {
    if prop.t() != spec.t() {
        return Err(GcnError::ShapeMismatch(format!(
            "propagator has t = {}, network has t = {}",
            prop.t(),
            spec.t()
        )));
    }
    if x.d_in() != spec.d_in() || x.k() != prop.k() {
        return Err(GcnError::ShapeMismatch(format!(
            "features are {}x{}, expected {}x{}",
            x.d_in(),
            x.k(),
            spec.d_in(),
            prop.k()
        )));
    }
    let (hidden, last) = spec.weights.split_at(spec.layers - 1);
    let mut h = x.values.clone();
    for w in hidden {
        let act = &spec.activation;
        h = w.matmul(&h.matmul(&prop.matrix)).map(|v| act.apply(v));
    }
    Ok(last[0].matmul(&h).as_slice().to_vec())
}

fn min_degree(g: &Graph) -> Result<usize, GcnError> {
    match (0..g.k()).map(|v| (g.degree(v), v)).min() {
        Some((0, v)) => Err(GcnError::IsolatedVertex(v)),
        Some((d, _)) => Ok(d),
        None => Err(GcnError::BadParams("graph has no vertices".into())),
    }
}

/// `d_in^{1/2} (1 + (k−1)^{1/2} / deg₋^{1/2})^{tL} ∏ β_l`, the feature-space
/// Lipschitz constant in the sup-norm.
pub fn feature_lipschitz_bound(spec: &GcnSpec, g: &Graph) -> Result<f64, GcnError> {
    if g.k() < 2 {
        return Err(GcnError::BadParams("graph needs at least two vertices".into()));
    }
    let deg_min = min_degree(g)? as f64;
    let k = g.k() as f64;
    let factor = 1.0 + ((k - 1.0) / deg_min).sqrt();
    Ok((spec.d_in() as f64).sqrt() * factor.powf(spec.t as f64 * spec.layers as f64) * spec.beta_product())
}

/// `B = max{feature_lipschitz_bound, diam(E_out)}`.
pub fn lipschitz_b(spec: &GcnSpec, g: &Graph, diam_eout: f64) -> Result<f64, GcnError> {
    if diam_eout.is_nan() || diam_eout < 0.0 {
        return Err(GcnError::BadParams(format!("diam(E_out) = {diam_eout} must be nonnegative")));
    }
    Ok(feature_lipschitz_bound(spec, g)?.max(diam_eout))
}

fn check_d_params(k: usize, m_feat: f64) -> Result<(), GcnError> {
    if k < 2 {
        return Err(GcnError::BadParams(format!("k = {k} must be at least 2")));
    }
    if !(0.5..f64::INFINITY).contains(&m_feat) {
        return Err(GcnError::BadParams(format!("feature bound {m_feat} must be at least 1/2")));
    }
    Ok(())
}

fn d_with_factor(spec: &GcnSpec, m_feat: f64, inner: f64) -> f64 {
    2.0 * m_feat
        * (spec.d_in() as f64).sqrt()
        * (1.0 + inner).powf(spec.t as f64 * spec.layers as f64)
        * spec.beta_product()
}

/// `D = 2M d_in^{1/2} (1 + c_k^{−1/2} (k−1)^{1/2})^{tL} ∏ β_l`.
pub fn lipschitz_d(spec: &GcnSpec, k: usize, c_k: f64, m_feat: f64) -> Result<f64, GcnError> {
    check_d_params(k, m_feat)?;
    if !(c_k.is_finite() && c_k > 0.0) {
        return Err(GcnError::BadParams(format!("c_k = {c_k} must be positive")));
    }
    Ok(d_with_factor(spec, m_feat, ((k as f64 - 1.0) / c_k).sqrt()))
}

/// `D` with the Erdős–Rényi degree factor `(c (k−1) / (k ln k))^{1/2}` in place of
/// `(c_k^{−1} (k−1))^{1/2}`.
pub fn lipschitz_d_erdos_renyi(spec: &GcnSpec, k: usize, c: f64, m_feat: f64) -> Result<f64, GcnError> {
    check_d_params(k, m_feat)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(GcnError::BadParams(format!("c = {c} must be positive")));
    }
    let kf = k as f64;
    Ok(d_with_factor(spec, m_feat, (c * (kf - 1.0) / (kf * kf.ln())).sqrt()))
}

/// Both readings of the Erdős–Rényi `D`, side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErdosRenyiD {
    pub c1: f64,
    /// `(c₁/2)(k ln k)^{1/2}`.
    pub c_k: f64,
    /// `D` with `c_k` substituted into the general formula.
    pub via_c_k: f64,
    /// `D` with the factor `(c (k−1)/(k ln k))^{1/2}` and `c = c₁`.
    pub printed: f64,
}

pub fn erdos_renyi_d(spec: &GcnSpec, k: usize, c1: f64, m_feat: f64) -> Result<ErdosRenyiD, GcnError> {
    let kf = k as f64;
    let c_k = 0.5 * c1 * (kf * kf.ln()).sqrt();
    Ok(ErdosRenyiD {
        c1,
        c_k,
        via_c_k: lipschitz_d(spec, k, c_k, m_feat)?,
        printed: lipschitz_d_erdos_renyi(spec, k, c1, m_feat)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureCertificate {
    pub max_ratio: f64,
    pub bound: f64,
    pub pairs: usize,
}

/// Largest `‖f(x) − f(x′)‖∞ / ‖x − x′‖∞` over seeded random feature pairs with
/// entries in `[−1, 1]`, next to [`feature_lipschitz_bound`].
pub fn certify_feature_lipschitz(
    spec: &GcnSpec,
    g: &Graph,
    trials: usize,
    seed: u64,
) -> Result<FeatureCertificate, GcnError> {
    let bound = feature_lipschitz_bound(spec, g)?;
    let prop = Propagator::new(g, spec.t)?;
    let k = g.k();
    let ratios: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let x = FeatureMatrix::random(spec.d_in(), k, 1.0, &mut rng);
            // Half the pairs are local perturbations, half are independent draws.
            let x2 = if trial % 2 == 0 {
                FeatureMatrix::random(spec.d_in(), k, 1.0, &mut rng)
            } else {
                let scale = rng.gen_range(1e-3..0.1);
                let noise = FeatureMatrix::random(spec.d_in(), k, scale, &mut rng);
                let data = x.values.as_slice().iter().zip(noise.values.as_slice()).map(|(a, b)| a + b).collect();
                FeatureMatrix::new(Matrix::from_row_major(spec.d_in(), k, data).expect("shape")).expect("finite")
            };
            let gap = x.values.max_abs_diff(&x2.values);
            if gap == 0.0 {
                return Ok(None);
            }
            let y = forward_with(spec, &prop, &x)?;
            let y2 = forward_with(spec, &prop, &x2)?;
            let out = y.iter().zip(&y2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            Ok(Some(out / gap))
        })
        .collect::<Result<_, GcnError>>()?;
    let pairs = ratios.iter().flatten().count();
    let max_ratio = ratios.into_iter().flatten().fold(0.0, f64::max);
    Ok(FeatureCertificate {
        max_ratio,
        bound,
        pairs,
    })
}

/// `max_{i≠j} |F(i) − F(j)| / d_G(i, j)` for the node map `F = f(G, x)`.
pub fn certify_node_lipschitz(spec: &GcnSpec, g: &Graph, x: &FeatureMatrix) -> Result<f64, GcnError> {
    let hops = shortest_path_metric(g);
    if !hops.is_finite() {
        return Err(GcnError::Disconnected);
    }
    let out = forward(spec, g, x)?;
    node_lipschitz_of(&out, |i, j| match hops.get(i, j) {
        Hops::Finite(h) => h as f64,
        Hops::Unreachable => f64::INFINITY,
    })
}

fn node_lipschitz_of(out: &[f64], dist: impl Fn(usize, usize) -> f64) -> Result<f64, GcnError> {
    let mut best: f64 = 0.0;
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            best = best.max((out[i] - out[j]).abs() / dist(i, j));
        }
    }
    Ok(best)
}

/// Random network of the given class: uniform entries rescaled so that
/// `‖W_l‖_op = u_l β_l` with `u_l` uniform in `[1/2, 1]`.
pub fn random_gcn<R: Rng + ?Sized>(
    t: u32,
    dims: &[usize],
    activation: Activation,
    betas: &[f64],
    rng: &mut R,
) -> Result<GcnSpec, GcnError> {
    if dims.len() != betas.len() + 1 {
        return Err(GcnError::BadSpec("need one budget per layer".into()));
    }
    let weights = (0..betas.len())
        .map(|l| {
            let (rows, cols) = (dims[l + 1], dims[l]);
            let raw = Matrix::from_row_major(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .expect("shape");
            let norm = raw.operator_norm();
            let target = betas[l] * rng.gen_range(0.5..=1.0) * (1.0 - 1e-12);
            if norm == 0.0 {
                raw
            } else {
                raw.scale(target / norm)
            }
        })
        .collect();
    GcnSpec::new(t, dims.to_vec(), activation, betas.to_vec(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn scalar_net(layers: usize, w: f64, activation: Activation) -> GcnSpec {
        GcnSpec::new(
            1,
            vec![1; layers + 1],
            activation,
            vec![w.abs(); layers],
            (0..layers).map(|_| Matrix::from_row_major(1, 1, vec![w]).unwrap()).collect(),
        )
        .unwrap()
    }

    fn features(rows: usize, data: Vec<f64>) -> FeatureMatrix {
        let k = data.len() / rows;
        FeatureMatrix::new(Matrix::from_row_major(rows, k, data).unwrap()).unwrap()
    }

    #[test]
    fn forward_examples() {
        let k2 = Graph::complete(2);
        let x = features(1, vec![1.0, -1.0]);
        let zero = scalar_net(2, 0.0, Activation::Relu);
        assert_eq!(forward(&zero, &k2, &x).unwrap(), vec![0.0, 0.0]);
        let one_layer = scalar_net(1, 1.0, Activation::Relu);
        assert_eq!(forward(&one_layer, &k2, &x).unwrap(), vec![1.0, -1.0]);
        // Δ_{K₂} = [[1, −1], [−1, 1]], so Δ(1, −1) = (2, −2).
        let two = scalar_net(2, 1.0, Activation::Identity);
        let out = forward(&two, &k2, &x).unwrap();
        assert_abs_diff_eq!(out[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], -2.0, epsilon = 1e-12);
        assert_eq!(
            forward(&two, &Graph::new(3, [(0, 1)]).unwrap(), &features(1, vec![0.0; 3])),
            Err(GcnError::IsolatedVertex(2))
        );
        assert!(matches!(forward(&two, &k2, &features(1, vec![0.0; 3])), Err(GcnError::ShapeMismatch(_))));
    }

    #[test]
    fn forward_matches_hand_computation_with_relu() {
        // P₃ Laplacian: diag 1, off-diagonal −1/√2 on edges.
        let g = Graph::path(3);
        let net = GcnSpec::new(
            1,
            vec![2, 1, 1],
            Activation::Relu,
            vec![1.0, 2.0],
            vec![
                Matrix::from_row_major(1, 2, vec![0.6, 0.8]).unwrap(),
                Matrix::from_row_major(1, 1, vec![2.0]).unwrap(),
            ],
        )
        .unwrap();
        let x = features(2, vec![1.0, 0.0, 2.0, 0.0, 1.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let lap = [[1.0, -s, 0.0], [-s, 1.0, -s], [0.0, -s, 1.0]];
        let expected: Vec<f64> = (0..3)
            .map(|v| {
                let row0: f64 = (0..3).map(|u| [1.0, 0.0, 2.0][u] * lap[u][v]).sum();
                let row1: f64 = (0..3).map(|u| [0.0, 1.0, 0.0][u] * lap[u][v]).sum();
                2.0 * (0.6 * row0 + 0.8 * row1).max(0.0)
            })
            .collect();
        let out = forward(&net, &g, &x).unwrap();
        for (a, b) in out.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        let over = GcnSpec::new(
            1,
            vec![1, 1],
            Activation::Relu,
            vec![0.5],
            vec![Matrix::from_row_major(1, 1, vec![1.0]).unwrap()],
        );
        assert!(matches!(over, Err(GcnError::NormBudgetExceeded { layer: 1, .. })));
        let wide_out = GcnSpec::new(1, vec![1, 2], Activation::Relu, vec![1.0], vec![Matrix::zeros(2, 1)]);
        assert!(matches!(wide_out, Err(GcnError::BadSpec(_))));
        assert!(matches!(
            Activation::custom("steep", 2.0, |x| 2.0 * x),
            Err(GcnError::ActivationNotContractive(_))
        ));
        let leaky = Activation::custom("leaky", 1.0, |x| if x > 0.0 { x } else { 0.1 * x }).unwrap();
        assert_eq!(leaky.apply(-1.0), -0.1);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"L":2,"t":1,"dims":[2,1,1],"activation":"tanh","betas":[1,1],"weights":[[0.6,0.8],[1]]}"#;
        let spec = GcnSpec::from_json(text).unwrap();
        assert_eq!(spec.layers(), 2);
        assert_eq!(spec.activation().name(), "tanh");
        assert_eq!(GcnSpec::from_json(&spec.to_json()).unwrap(), spec);
        let bad_shape = r#"{"L":1,"t":1,"dims":[2,1],"activation":"relu","betas":[1],"weights":[[1]]}"#;
        assert!(matches!(GcnSpec::from_json(bad_shape), Err(GcnError::ShapeMismatch(_))));
        let bad_act = r#"{"L":1,"t":1,"dims":[1,1],"activation":"softplus","betas":[1],"weights":[[1]]}"#;
        assert!(matches!(GcnSpec::from_json(bad_act), Err(GcnError::UnknownActivation(_))));
        assert!(matches!(GcnSpec::from_json("{"), Err(GcnError::Json(_))));
    }

    fn unit_net(d_in: usize, layers: usize, t: u32, beta: f64) -> GcnSpec {
        let mut dims = vec![d_in];
        dims.extend(std::iter::repeat_n(1, layers));
        let mut weights = vec![Matrix::zeros(1, d_in)];
        weights.extend((1..layers).map(|_| Matrix::zeros(1, 1)));
        GcnSpec::new(t, dims, Activation::Relu, vec![beta; layers], weights).unwrap()
    }

    #[test]
    fn lipschitz_b_examples() {
        // k = 5 with minimum degree 2: the cycle C₅.
        let net = unit_net(4, 2, 1, 1.0);
        let b = lipschitz_b(&net, &Graph::cycle(5), 1.0).unwrap();
        assert_abs_diff_eq!(b, 2.0 * (1.0 + 2f64.sqrt()).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(b, 11.657, epsilon = 1e-3);
        let zero = unit_net(4, 2, 1, 0.0);
        assert_eq!(lipschitz_b(&zero, &Graph::cycle(5), 0.7).unwrap(), 0.7);
        let k6 = feature_lipschitz_bound(&unit_net(1, 3, 2, 1.0), &Graph::complete(6)).unwrap();
        assert_abs_diff_eq!(k6, 2f64.powi(6), epsilon = 1e-12);
        assert_eq!(
            lipschitz_b(&net, &Graph::new(3, [(0, 1)]).unwrap(), 1.0),
            Err(GcnError::IsolatedVertex(2))
        );
    }

    #[test]
    fn lipschitz_d_examples() {
        let net = unit_net(1, 1, 1, 1.0);
        assert_abs_diff_eq!(lipschitz_d(&net, 7, 6.0, 0.5).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(lipschitz_d(&unit_net(1, 1, 1, 0.0), 7, 6.0, 0.5).unwrap(), 0.0);
        assert!(matches!(lipschitz_d(&net, 7, 0.0, 0.5), Err(GcnError::BadParams(_))));
        assert!(matches!(lipschitz_d(&net, 7, 1.0, 0.4), Err(GcnError::BadParams(_))));
        let er = erdos_renyi_d(&net, 100, 3f64.sqrt() / 2.0, 1.0).unwrap();
        let kf = 100f64;
        let c_k = 3f64.sqrt() / 4.0 * (kf * kf.ln()).sqrt();
        assert_abs_diff_eq!(er.via_c_k, 2.0 * (1.0 + (99.0 / c_k).sqrt()), epsilon = 1e-12);
        let printed = 2.0 * (1.0 + (3f64.sqrt() / 2.0 * 99.0 / (kf * kf.ln())).sqrt());
        assert_abs_diff_eq!(er.printed, printed, epsilon = 1e-12);
        assert!(er.via_c_k > er.printed);
    }

    #[test]
    fn certificates() {
        let k2 = Graph::complete(2);
        let net = scalar_net(2, 1.0, Activation::Identity);
        let x = features(1, vec![1.0, -1.0]);
        let lip = certify_node_lipschitz(&net, &k2, &x).unwrap();
        assert_abs_diff_eq!(lip, 4.0, epsilon = 1e-12);
        assert!(lip <= lipschitz_d(&net, 2, 1.0, 1.0).unwrap());
        assert_eq!(certify_node_lipschitz(&net, &k2, &FeatureMatrix::zeros(1, 2)).unwrap(), 0.0);
        let zero = scalar_net(2, 0.0, Activation::Identity);
        assert_eq!(certify_node_lipschitz(&zero, &k2, &x).unwrap(), 0.0);
        let cert = certify_feature_lipschitz(&zero, &Graph::cycle(5), 50, 1).unwrap();
        assert_eq!(cert.max_ratio, 0.0);
        let cert = certify_feature_lipschitz(&net, &Graph::cycle(5), 200, 1).unwrap();
        assert_eq!(cert.pairs, 200);
        assert!(cert.max_ratio > 0.0 && cert.max_ratio <= cert.bound);
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(
            certify_node_lipschitz(&net, &split, &FeatureMatrix::zeros(1, 4)),
            Err(GcnError::Disconnected)
        );
    }

    #[test]
    fn random_networks_respect_budgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let net = random_gcn(2, &[3, 4, 2, 1], Activation::Tanh, &[1.0, 0.5, 2.0], &mut rng).unwrap();
            for (w, b) in net.weights().iter().zip(net.betas()) {
                assert!(w.operator_norm() <= b + NORM_TOL);
            }
        }
    }

    proptest! {
        #[test]
        fn positively_homogeneous_in_weights(seed in any::<u64>(), c in 0.1f64..5.0, act in 0usize..3) {
            let activation = [Activation::Relu, Activation::Identity, Activation::Abs][act].clone();
            prop_assert!(activation.is_positively_homogeneous());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_gcn(1, &[2, 3, 1], activation, &[1.0, 1.0], &mut rng).unwrap();
            let g = Graph::cycle(5);
            let x = FeatureMatrix::random(2, 5, 1.0, &mut rng);
            let base = forward(&net, &g, &x).unwrap();
            let scaled = forward(&net.scaled(c), &g, &x).unwrap();
            let factor = c.powi(net.layers() as i32);
            for (a, b) in base.iter().zip(&scaled) {
                prop_assert!((a * factor - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}
