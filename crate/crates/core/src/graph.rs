//! Simple undirected graphs, hop-count metrics and generic finite metric spaces.
//!
//! A [`Graph`] lives on vertices `0..k`. Its shortest-path metric is returned as a
//! [`HopMetric`], which keeps unreachable pairs as [`Hops::Unreachable`]; only a
//! connected graph converts into a [`FiniteMetric`], the type every downstream
//! computation accepts.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Absolute tolerance used for all metric-axiom checks.
pub const METRIC_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least one vertex")]
    Empty,
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for k = {k}")]
    VertexOutOfRange { vertex: usize, k: usize },
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance matrix has {got} entries, expected {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("distance ({i},{j}) = {value} is not a finite nonnegative number")]
    BadEntry { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal at {0}")]
    NonZeroDiagonal(usize),
    #[error("distinct points {0} and {1} are at distance zero")]
    ZeroDistance(usize, usize),
    #[error("asymmetric distances at ({0},{1})")]
    Asymmetric(usize, usize),
    #[error("triangle inequality fails for ({i},{j},{l})")]
    Triangle { i: usize, j: usize, l: usize },
    #[error("metric has unreachable pairs (disconnected graph)")]
    NonFinite,
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Finite, simple, undirected graph on `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    k: usize,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn new<I>(k: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if k == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut adj = vec![Vec::new(); k];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= k {
                    return Err(GraphError::VertexOutOfRange { vertex: w, k });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        Ok(Self {
            k,
            adj,
            edge_count: seen.len(),
        })
    }

    /// Builds from canonical `(i, j)`, `i < j` pairs known to be unique. Used by
    /// samplers that generate each pair exactly once.
    pub(crate) fn from_unique_pairs(k: usize, pairs: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); k];
        for &(u, v) in &pairs {
            adj[u].push(v);
            adj[v].push(u);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        Self {
            k,
            adj,
            edge_count: pairs.len(),
        }
    }

    pub fn complete(k: usize) -> Self {
        let pairs = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .collect();
        Self::from_unique_pairs(k.max(1), pairs)
    }

    /// Star with center 0 and `k - 1` leaves.
    pub fn star(k: usize) -> Self {
        Self::from_unique_pairs(k.max(1), (1..k).map(|j| (0, j)).collect())
    }

    pub fn path(k: usize) -> Self {
        Self::from_unique_pairs(k.max(1), (1..k).map(|j| (j - 1, j)).collect())
    }

    pub fn cycle(k: usize) -> Self {
        assert!(k >= 3, "cycle needs k >= 3");
        let mut pairs: Vec<_> = (1..k).map(|j| (j - 1, j)).collect();
        pairs.push((0, k - 1));
        Self::from_unique_pairs(k, pairs)
    }

    pub fn empty(k: usize) -> Self {
        Self::from_unique_pairs(k.max(1), Vec::new())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn is_complete(&self) -> bool {
        self.edge_count == self.k * (self.k - 1) / 2
    }

    pub fn bfs(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.k];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(Option::is_some)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("k={}\n", self.k);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Parses the edge-list text format: one `u v` pair per line, `#` comments,
/// optional `k=<n>` header. Without a header the vertex count is `max id + 1`.
impl FromStr for Graph {
    type Err = ParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut header_k = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| ParseError::Line { line: line_no, msg };
            if let Some(rest) = line.strip_prefix("k=") {
                if header_k.is_some() {
                    return Err(bad("repeated k= header".into()));
                }
                let k = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| bad(format!("bad vertex count: {e}")))?;
                header_k = Some(k);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(bad(format!("expected `u v`, got {line:?}")));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| bad(format!("bad vertex id {s:?}: {e}")))
            };
            edges.push((parse(fields[0])?, parse(fields[1])?));
        }
        let k = match header_k {
            Some(k) => k,
            None => edges
                .iter()
                .map(|&(u, v)| u.max(v) + 1)
                .max()
                .ok_or_else(|| ParseError::Line {
                    line: 0,
                    msg: "no edges and no k= header".into(),
                })?,
        };
        Ok(Graph::new(k, edges)?)
    }
}

/// Entry of a hop-count matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Hops {
    Finite(u32),
    Unreachable,
}

/// Diameter of a possibly disconnected space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diameter {
    Finite(f64),
    Infinite,
}

impl Diameter {
    pub fn finite(self) -> Option<f64> {
        match self {
            Diameter::Finite(d) => Some(d),
            Diameter::Infinite => None,
        }
    }

    pub fn at_most(self, bound: f64) -> bool {
        matches!(self, Diameter::Finite(d) if d <= bound)
    }
}

impl fmt::Display for Diameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diameter::Finite(d) => write!(f, "{d}"),
            Diameter::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Diameter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Diameter::Finite(d) => s.serialize_f64(*d),
            Diameter::Infinite => s.serialize_str("inf"),
        }
    }
}

/// All-pairs shortest-path hop counts of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct HopMetric {
    k: usize,
    hops: Vec<Hops>,
}

impl HopMetric {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> Hops {
        self.hops[i * self.k + j]
    }

    pub fn is_finite(&self) -> bool {
        self.hops.iter().all(|h| matches!(h, Hops::Finite(_)))
    }

    pub fn diameter(&self) -> Diameter {
        match self.hops.iter().max() {
            Some(Hops::Finite(d)) => Diameter::Finite(f64::from(*d)),
            Some(Hops::Unreachable) => Diameter::Infinite,
            None => Diameter::Finite(0.0),
        }
    }

    pub fn to_finite(&self) -> Result<FiniteMetric, MetricError> {
        let dist = self
            .hops
            .iter()
            .map(|h| match h {
                Hops::Finite(d) => Ok(f64::from(*d)),
                Hops::Unreachable => Err(MetricError::NonFinite),
            })
            .collect::<Result<Vec<_>, _>>()?;
        // BFS distances satisfy every axiom exactly.
        Ok(FiniteMetric { k: self.k, dist })
    }
}

pub fn shortest_path_metric(g: &Graph) -> HopMetric {
    let k = g.k();
    let mut hops = Vec::with_capacity(k * k);
    for s in 0..k {
        hops.extend(g.bfs(s).into_iter().map(|d| match d {
            Some(d) => Hops::Finite(d),
            None => Hops::Unreachable,
        }));
    }
    HopMetric { k, hops }
}

/// Shortest-path metric of a connected graph.
pub fn graph_metric(g: &Graph) -> Result<FiniteMetric, MetricError> {
    shortest_path_metric(g).to_finite()
}

/// Metric space on `k` points stored as a dense row-major distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    k: usize,
    dist: Vec<f64>,
}

impl FiniteMetric {
    /// Validates every metric axiom at [`METRIC_TOL`].
    pub fn new(k: usize, dist: Vec<f64>) -> Result<Self, MetricError> {
        if dist.len() != k * k || k == 0 {
            return Err(MetricError::BadShape {
                expected: k * k,
                got: dist.len(),
            });
        }
        let at = |i: usize, j: usize| dist[i * k + j];
        for i in 0..k {
            for j in 0..k {
                let d = at(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(MetricError::BadEntry { i, j, value: d });
                }
            }
            if at(i, i) != 0.0 {
                return Err(MetricError::NonZeroDiagonal(i));
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if (at(i, j) - at(j, i)).abs() > METRIC_TOL {
                    return Err(MetricError::Asymmetric(i, j));
                }
                if at(i, j) <= 0.0 {
                    return Err(MetricError::ZeroDistance(i, j));
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    if at(i, j) > at(i, l) + at(l, j) + METRIC_TOL {
                        return Err(MetricError::Triangle { i, j, l });
                    }
                }
            }
        }
        Ok(Self { k, dist })
    }

    /// Builds from a distance function evaluated on `i < j`.
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, MetricError> {
        let mut dist = vec![0.0; k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let d = f(i, j);
                dist[i * k + j] = d;
                dist[j * k + i] = d;
            }
        }
        Self::new(k, dist)
    }

    /// Skips validation; callers guarantee the axioms by construction.
    pub(crate) fn from_trusted(k: usize, dist: Vec<f64>) -> Self {
        debug_assert_eq!(dist.len(), k * k);
        Self { k, dist }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest off-diagonal distance; `None` for a singleton.
    pub fn min_distance(&self) -> Option<f64> {
        (0..self.k)
            .flat_map(|i| (i + 1..self.k).map(move |j| (i, j)))
            .map(|(i, j)| self.dist(i, j))
            .reduce(f64::min)
    }

    /// Sorted distinct distances, including 0.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut values = self.dist.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }
}

/// `max(base(i, j), |label_i - label_j|)`: the sup-product of a base metric with
/// the real line, restricted to the graph of `labels`.
pub fn product_metric(base: &FiniteMetric, labels: &[f64]) -> Result<FiniteMetric, MetricError> {
    let k = base.k();
    if labels.len() != k {
        return Err(MetricError::LabelCount {
            expected: k,
            got: labels.len(),
        });
    }
    if let Some((j, &y)) = labels.iter().enumerate().find(|(_, y)| !y.is_finite()) {
        return Err(MetricError::BadEntry { i: j, j, value: y });
    }
    let dist = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| base.dist(i, j).max((labels[i] - labels[j]).abs()))
        .collect();
    // max of two (pseudo)metrics with a metric component is a metric.
    Ok(FiniteMetric::from_trusted(k, dist))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeStats {
    pub deg_min: usize,
    pub deg_max: usize,
    pub degrees: Vec<usize>,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let degrees: Vec<usize> = (0..g.k()).map(|v| g.degree(v)).collect();
    DegreeStats {
        deg_min: degrees.iter().copied().min().unwrap_or(0),
        deg_max: degrees.iter().copied().max().unwrap_or(0),
        degrees,
    }
}
