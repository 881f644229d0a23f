//! Exact pricing-hedging duality for American options in finite
//! discrete-time markets with semi-static trading.
//!
//! The crate computes superhedging prices (European, American, and European
//! on the enlarged space `Ω × {1..N}`), the dual values over calibrated
//! martingale measures under strong, weak, randomized and pseudo stopping,
//! Snell envelopes with the optimal exercise rule, dynamic extensions in which
//! static options become dynamically traded, and the martingale optimal
//! transport variant with marginal constraints and measure-valued martingales.
//!
//! Every value is the optimum of a linear program solved by [`lp::solve`],
//! exactly over [`scalar::Rational`] or approximately over `f64`.

pub mod dpp;
pub mod dual;
pub mod ensemble;
pub mod error;
pub mod fixtures;
pub mod hedging;
pub mod lp;
pub mod market;
pub(crate) mod measure_lp;
pub mod mot;
pub mod scalar;

pub use error::{Error, Result};
pub use market::{AmericanPayoff, EnlargedMarket, EnlargedMeasure, Market, MarketSpec, PathMeasure};
pub use scalar::{Mode, Rational, Scalar};

/// Default cap on the number of enumerated stopping rules.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;
