//! Transductive generalization bounds for graph learners.
//!
//! Graph metrics, doubling constants, spectral bounds, snowflake embeddings, exact
//! transport, GCN Lipschitz certificates, and Erdős–Rényi event checks, together with
//! evaluators for the resulting generalization bounds.

pub mod concentration;
pub mod doubling;
pub mod embedding;
pub mod gcn;
pub mod graph;
pub mod linalg;
pub mod random_graphs;
pub mod risk;
pub mod spectral;
pub mod transport;

use thiserror::Error;

/// Any error raised by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Metric(#[from] graph::MetricError),
    #[error(transparent)]
    Parse(#[from] graph::ParseError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Doubling(#[from] doubling::DoublingError),
    #[error(transparent)]
    Transport(#[from] transport::TransportError),
    #[error(transparent)]
    Embedding(#[from] embedding::EmbeddingError),
    #[error(transparent)]
    Concentration(#[from] concentration::ConcentrationError),
    #[error(transparent)]
    Gcn(#[from] gcn::GcnError),
    #[error(transparent)]
    Risk(#[from] risk::RiskError),
    #[error(transparent)]
    RandomGraph(#[from] random_graphs::RandomGraphError),
}
