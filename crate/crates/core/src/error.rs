use crate::lp::LpError;
use crate::market::MarketError;

/// Errors raised by pricing, dual and extension routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Market(#[from] MarketError),
    /// The superhedging program is unbounded below: the market admits arbitrage.
    #[error("superhedging price is unbounded below (the market admits arbitrage)")]
    UnboundedBelow,
    #[error("no calibrated martingale measure exists")]
    NoCalibratedMeasure,
    #[error("stopping-time enumeration needs about {estimate} rules, above the cap of {cap}")]
    EnumerationCapExceeded { estimate: u128, cap: u128 },
    #[error("measure is not a calibrated martingale measure: {0}")]
    NotCalibrated(String),
    #[error("no exercise date satisfies the optimality condition on path {path}")]
    NoStopFound { path: usize },
    #[error("only one-dimensional assets are supported here (found dimension {0})")]
    DimensionUnsupported(usize),
    #[error("marginal support does not fit the path grid: {0}")]
    SupportMismatch(String),
    #[error("value is -inf: {0}")]
    Degenerate(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
