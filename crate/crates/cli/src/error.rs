use thiserror::Error;

use tbl_core::concentration::ConcentrationError;
use tbl_core::embedding::EmbeddingError;
use tbl_core::gcn::GcnError;
use tbl_core::risk::RiskError;
use tbl_core::transport::TransportError;

/// Failure classes, one per exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs.
    #[error("{0}")]
    Usage(String),
    /// Inputs parse but violate a precondition.
    #[error("{0}")]
    Domain(String),
    /// A numerical routine failed.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

fn transport_is_numeric(e: &TransportError) -> bool {
    matches!(e, TransportError::NoConvergence(_) | TransportError::InfeasibleDual { .. })
}

fn gcn_class(e: &GcnError) -> fn(String) -> CliError {
    match e {
        GcnError::Json(_) | GcnError::UnknownActivation(_) => CliError::Usage,
        _ => CliError::Domain,
    }
}

impl From<tbl_core::Error> for CliError {
    fn from(e: tbl_core::Error) -> Self {
        use tbl_core::Error as E;
        let msg = e.to_string();
        match &e {
            E::Parse(_) => CliError::Usage(msg),
            E::Transport(t) if transport_is_numeric(t) => CliError::Numeric(msg),
            E::Concentration(ConcentrationError::Transport(t)) if transport_is_numeric(t) => CliError::Numeric(msg),
            E::Embedding(EmbeddingError::DimensionOverflow(_)) => CliError::Numeric(msg),
            E::Gcn(g) | E::Risk(RiskError::Gcn(g)) => gcn_class(g)(msg),
            _ => CliError::Domain(msg),
        }
    }
}

macro_rules! via_core {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                tbl_core::Error::from(e).into()
            }
        })*
    };
}

via_core!(
    tbl_core::graph::ParseError,
    tbl_core::graph::MetricError,
    tbl_core::doubling::DoublingError,
    tbl_core::concentration::ConcentrationError,
    tbl_core::gcn::GcnError,
    tbl_core::risk::RiskError,
    tbl_core::random_graphs::RandomGraphError,
    tbl_core::transport::TransportError
);
