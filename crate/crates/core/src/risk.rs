//! Transductive risks and evaluators for the uniform generalization bounds.
//!
//! Risks use the snowflaked loss `ℓ^{1/2}`. The empirical risk averages it over `N`
//! nodes drawn i.i.d. from the node measure; the true risk integrates it exactly.
//! Bounds have the common shape
//! `(2 B_ℓ L)^{1/2} (S^{1/2} min{4r₁, 48r₂} + 𝔱)`, where `L` is the class Lipschitz
//! constant (`B` or `D`) and `S` the diameter term.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::concentration::r1;
use crate::gcn::{
    erdos_renyi_d, forward_with, lipschitz_b, lipschitz_d, FeatureMatrix, GcnError, GcnSpec, Propagator,
};
use crate::graph::{shortest_path_metric, Diameter, Graph};
use crate::transport::DiscreteMeasure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("sample is empty")]
    EmptySample,
    #[error("node {node} out of range for {k} nodes")]
    NodeOutOfRange { node: usize, k: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("hypothesis pool is empty")]
    EmptyPool,
    #[error("pool member {0} is not in the teacher's class")]
    ClassMismatch(usize),
    #[error(transparent)]
    Gcn(#[from] GcnError),
}

fn bad(msg: impl Into<String>) -> RiskError {
    RiskError::BadParams(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LossKind {
    Absolute,
    /// `min(|y − z|, clip)²`.
    SquaredClipped { clip: f64 },
    /// Huber loss with threshold `delta`.
    Huber { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossSpec {
    #[serde(flatten)]
    pub kind: LossKind,
    /// Lipschitz constant with respect to `max(|y − y′|, |z − z′|)`.
    pub lipschitz_bl: f64,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Result<Self, RiskError> {
        let lipschitz_bl = match kind {
            LossKind::Absolute => 2.0,
            LossKind::SquaredClipped { clip } if clip > 0.0 && clip.is_finite() => 4.0 * clip,
            LossKind::Huber { delta } if delta > 0.0 && delta.is_finite() => 2.0 * delta,
            other => return Err(bad(format!("loss parameter out of range: {other:?}"))),
        };
        Ok(Self { kind, lipschitz_bl })
    }

    pub fn absolute() -> Self {
        Self::new(LossKind::Absolute).expect("absolute loss is valid")
    }

    pub fn eval(&self, y: f64, z: f64) -> f64 {
        let u = (y - z).abs();
        match self.kind {
            LossKind::Absolute => u,
            LossKind::SquaredClipped { clip } => u.min(clip).powi(2),
            LossKind::Huber { delta } => {
                if u <= delta {
                    0.5 * u * u
                } else {
                    delta * (u - 0.5 * delta)
                }
            }
        }
    }

    /// `ℓ(y, z)^{1/2}`.
    pub fn snowflaked(&self, y: f64, z: f64) -> f64 {
        self.eval(y, z).sqrt()
    }
}

/// One graph, one feature matrix, labels produced by a teacher network.
#[derive(Debug, Clone)]
pub struct TransductiveTask {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub teacher: GcnSpec,
    pub node_measure: DiscreteMeasure,
    pub loss: LossSpec,
    pub n: usize,
    /// Diameter of the output space; the teacher's output range unless overridden.
    pub diam_eout: f64,
    labels: Vec<f64>,
    propagator: Propagator,
}

fn output_range(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

impl TransductiveTask {
    pub fn new(
        graph: Graph,
        features: FeatureMatrix,
        teacher: GcnSpec,
        node_measure: DiscreteMeasure,
        loss: LossSpec,
        n: usize,
    ) -> Result<Self, RiskError> {
        if node_measure.len() != graph.k() {
            return Err(bad(format!(
                "node measure has {} points for {} nodes",
                node_measure.len(),
                graph.k()
            )));
        }
        let propagator = Propagator::new(&graph, teacher.t())?;
        let labels = forward_with(&teacher, &propagator, &features)?;
        Ok(Self {
            diam_eout: output_range(&labels),
            graph,
            features,
            teacher,
            node_measure,
            loss,
            n,
            labels,
            propagator,
        })
    }

    pub fn k(&self) -> usize {
        self.graph.k()
    }

    /// Teacher outputs `Y_v`.
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn predictions(&self, f: &GcnSpec) -> Result<Vec<f64>, RiskError> {
        Ok(forward_with(f, &self.propagator, &self.features)?)
    }

    /// Sets `diam(E_out)` to the output range of the teacher and every pool member.
    pub fn fit_output_range(&mut self, pool: &[GcnSpec]) -> Result<(), RiskError> {
        let mut all = self.labels.clone();
        for f in pool {
            all.extend(self.predictions(f)?);
        }
        self.diam_eout = output_range(&all);
        Ok(())
    }

    fn node_losses(&self, predictions: &[f64]) -> Vec<f64> {
        predictions
            .iter()
            .zip(&self.labels)
            .map(|(&p, &y)| self.loss.snowflaked(p, y))
            .collect()
    }
}

fn mean_over(losses: &[f64], sample: &[usize]) -> Result<f64, RiskError> {
    if sample.is_empty() {
        return Err(RiskError::EmptySample);
    }
    let mut total = 0.0;
    for &v in sample {
        total += *losses.get(v).ok_or(RiskError::NodeOutOfRange { node: v, k: losses.len() })?;
    }
    Ok(total / sample.len() as f64)
}

/// `(1/N) Σ_n ℓ(π_{V_n} f(x), Y_n)^{1/2}`.
pub fn empirical_risk(task: &TransductiveTask, f: &GcnSpec, sample: &[usize]) -> Result<f64, RiskError> {
    let losses = task.node_losses(&task.predictions(f)?);
    mean_over(&losses, sample)
}

/// `Σ_v P(v) ℓ(π_v f(x), π_v f*(x))^{1/2}`.
pub fn true_risk(task: &TransductiveTask, f: &GcnSpec) -> Result<f64, RiskError> {
    let losses = task.node_losses(&task.predictions(f)?);
    Ok(task.node_measure.integrate(&losses))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LipschitzKind {
    B,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "4r1")]
    FourR1,
    #[serde(rename = "48r2")]
    FortyEightR2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub kind: LipschitzKind,
    /// Value of `B` or `D`.
    pub lipschitz: f64,
    pub b_loss: f64,
    pub k: usize,
    pub n: usize,
    pub diam_g: f64,
    pub diam_eout: f64,
    /// Diameter term `S` under the square root.
    pub diam_term: f64,
    pub r1: f64,
    pub r2: f64,
    pub t_dev: f64,
    pub branch_4r1: f64,
    pub branch_48r2: f64,
    pub min_branch: Branch,
    pub bound: f64,
    pub delta: f64,
    pub confidence: f64,
    /// Other readings of the constant, reported next to the one used.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<(String, f64)>,
}

impl BoundReport {
    /// Recomputes the bound from the stored fields.
    pub fn recompute(&self) -> f64 {
        let branch = self.branch_4r1.min(self.branch_48r2);
        (2.0 * self.b_loss * self.lipschitz).sqrt() * (self.diam_term.sqrt() * branch + self.t_dev)
    }
}

struct BoundInputs {
    kind: LipschitzKind,
    lipschitz: f64,
    b_loss: f64,
    k: usize,
    n: usize,
    diam_g: f64,
    diam_eout: f64,
    diam_term: f64,
    delta: f64,
    confidence: f64,
}

fn assemble(i: BoundInputs) -> BoundReport {
    let nf = i.n as f64;
    let r1v = r1(i.n as u64);
    let r2v = i.k as f64 * i.diam_term.sqrt() / nf.sqrt();
    let t = (3.0 * (2.0 / i.delta).log2() * i.diam_term).sqrt() / nf.sqrt();
    let (b1, b2) = (4.0 * r1v, 48.0 * r2v);
    let min_branch = if b1 <= b2 { Branch::FourR1 } else { Branch::FortyEightR2 };
    let mut report = BoundReport {
        schema_version: SCHEMA_VERSION,
        kind: i.kind,
        lipschitz: i.lipschitz,
        b_loss: i.b_loss,
        k: i.k,
        n: i.n,
        diam_g: i.diam_g,
        diam_eout: i.diam_eout,
        diam_term: i.diam_term,
        r1: r1v,
        r2: r2v,
        t_dev: t,
        branch_4r1: b1,
        branch_48r2: b2,
        min_branch,
        bound: 0.0,
        delta: i.delta,
        confidence: i.confidence,
        variants: Vec::new(),
    };
    report.bound = report.recompute();
    report
}

fn check_common(k: usize, n: usize) -> Result<(), RiskError> {
    if k < 2 {
        return Err(bad(format!("k = {k} must be at least 2")));
    }
    if n < 4 {
        return Err(bad(format!("N = {n} must be at least 4")));
    }
    Ok(())
}

fn graph_diameter(g: &Graph) -> Result<f64, RiskError> {
    match shortest_path_metric(g).diameter() {
        Diameter::Finite(d) => Ok(d),
        Diameter::Infinite => Err(RiskError::Disconnected),
    }
}

/// Uniform bound for a `B`-Lipschitz class on a fixed graph, with confidence `1 − δ`.
pub fn theorem31_bound(task: &TransductiveTask, b: f64, delta: f64) -> Result<BoundReport, RiskError> {
    check_common(task.k(), task.n)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(bad(format!("delta {delta} outside (0, 1)")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(bad(format!("Lipschitz constant {b} must be finite and nonnegative")));
    }
    let diam_g = graph_diameter(&task.graph)?;
    Ok(assemble(BoundInputs {
        kind: LipschitzKind::B,
        lipschitz: b,
        b_loss: task.loss.lipschitz_bl,
        k: task.k(),
        n: task.n,
        diam_g,
        diam_eout: task.diam_eout,
        diam_term: diam_g + task.diam_eout,
        delta,
        confidence: 1.0 - delta,
    }))
}

/// [`theorem31_bound`] with `B` computed for the teacher's class.
pub fn corollary31_bound(task: &TransductiveTask, delta: f64) -> Result<BoundReport, RiskError> {
    let b = lipschitz_b(&task.teacher, &task.graph, task.diam_eout)?;
    theorem31_bound(task, b, delta)
}

/// Parameters of the noisy-graph bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyBoundParams {
    pub k: usize,
    pub n: usize,
    pub c_k: f64,
    pub m_feat: f64,
    pub b_loss: f64,
    pub delta: f64,
}

fn check_noisy(p: &NoisyBoundParams) -> Result<(), RiskError> {
    check_common(p.k, p.n)?;
    if !(p.delta > 0.0 && p.delta < 0.5) {
        return Err(bad(format!("delta {} outside (0, 1/2)", p.delta)));
    }
    if !(p.b_loss >= 0.0 && p.b_loss.is_finite()) {
        return Err(bad(format!("loss constant {} must be nonnegative", p.b_loss)));
    }
    Ok(())
}

fn noisy_report(p: &NoisyBoundParams, d: f64) -> BoundReport {
    assemble(BoundInputs {
        kind: LipschitzKind::D,
        lipschitz: d,
        b_loss: p.b_loss,
        k: p.k,
        n: p.n,
        diam_g: 2.0,
        diam_eout: d,
        diam_term: 2.0 + d,
        delta: p.delta,
        confidence: 1.0 - 2.0 * p.delta,
    })
}

/// Uniform bound over the class of `spec` on an admissible random graph with
/// features in `[−M, M]`, with confidence `1 − 2δ`.
pub fn theorem32_bound(spec: &GcnSpec, p: &NoisyBoundParams) -> Result<BoundReport, RiskError> {
    check_noisy(p)?;
    let d = lipschitz_d(spec, p.k, p.c_k, p.m_feat)?;
    Ok(noisy_report(p, d))
}

/// Erdős–Rényi form of [`theorem32_bound`]: `D` uses the factor
/// `(c (k−1)/(k ln k))^{1/2}`; the value with `c_k = (c/2)(k ln k)^{1/2}`
/// substituted into the general formula is reported as a variant. `p.c_k` is ignored.
pub fn corollary32_bound(spec: &GcnSpec, p: &NoisyBoundParams, c: f64) -> Result<BoundReport, RiskError> {
    check_noisy(p)?;
    let er = erdos_renyi_d(spec, p.k, c, p.m_feat)?;
    let mut report = noisy_report(p, er.printed);
    let alt = noisy_report(p, er.via_c_k);
    report.variants = vec![
        ("c_k".into(), er.c_k),
        ("d_via_c_k".into(), er.via_c_k),
        ("bound_via_c_k".into(), alt.bound),
    ];
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub trials: usize,
    pub pool_size: usize,
    pub bound: f64,
    pub delta: f64,
    pub coverage: f64,
    pub max_gap: f64,
    pub pass: bool,
    /// Per-trial `max_f |R(f) − R^N(f)|` over the pool.
    #[serde(skip)]
    pub gaps: Vec<f64>,
}

/// Fraction of seeded samples of `N` nodes on which every pool member's gap
/// `|R(f) − R^N(f)|` stays within `bound`.
///
/// The pool is a finite subset of the class, so a coverage below `1 − δ` falsifies the
/// bound while a pass does not prove it.
pub fn validate_bound_montecarlo(
    task: &TransductiveTask,
    pool: &[GcnSpec],
    bound: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ValidationReport, RiskError> {
    if pool.is_empty() {
        return Err(RiskError::EmptyPool);
    }
    if trials == 0 {
        return Err(bad("trials must be at least 1"));
    }
    if task.n == 0 {
        return Err(RiskError::EmptySample);
    }
    if let Some(i) = pool.iter().position(|f| !f.same_class(&task.teacher)) {
        return Err(RiskError::ClassMismatch(i));
    }
    let members: Vec<(Vec<f64>, f64)> = pool
        .par_iter()
        .map(|f| {
            let losses = task.node_losses(&task.predictions(f)?);
            let truth = task.node_measure.integrate(&losses);
            Ok((losses, truth))
        })
        .collect::<Result<_, RiskError>>()?;
    let nodes = WeightedIndex::new(task.node_measure.weights()).map_err(|e| bad(e.to_string()))?;
    let gaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let sample: Vec<usize> = (0..task.n).map(|_| nodes.sample(&mut rng)).collect();
            members
                .iter()
                .map(|(losses, truth)| {
                    let emp = sample.iter().map(|&v| losses[v]).sum::<f64>() / sample.len() as f64;
                    (truth - emp).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let covered = gaps.iter().filter(|&&g| g <= bound).count();
    let coverage = covered as f64 / trials as f64;
    Ok(ValidationReport {
        trials,
        pool_size: pool.len(),
        bound,
        delta,
        coverage,
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        pass: coverage >= 1.0 - delta,
        gaps,
    })
}
