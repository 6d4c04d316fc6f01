use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidParameter(String),

    #[error("family mismatch: {0}")]
    FamilyMismatch(String),

    #[error(
        "quadrature did not converge: achieved error bound {achieved:e} (requested {requested:e})"
    )]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("cannot compose budgets of different kinds ({first} and {other})")]
    MixedBudgetKinds {
        first: &'static str,
        other: &'static str,
    },

    #[error("cannot compose Renyi budgets of different orders ({first} and {other})")]
    MixedRenyiOrder { first: f64, other: f64 },

    #[error("no supported conversion from {from} to {to} under a {context} mechanism")]
    UnsupportedConversion {
        from: &'static str,
        to: &'static str,
        context: &'static str,
    },

    #[error("release id {0:?} already present in ledger")]
    DuplicateRelease(String),

    #[error("ledger tracks {expected} budgets, entry carries {found}")]
    LedgerKindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("record {index} has value {value}, outside the declared bounds [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("malformed budget: {0}")]
    MalformedBudget(String),

    #[error("ledger {path:?} is locked by another process")]
    LedgerLocked { path: PathBuf },

    #[error("ledger I/O on {path:?}: {source}")]
    LedgerIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ledger {path:?} is not valid JSON: {source}")]
    LedgerFormat {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
