//! Error type shared by all modules.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Operator description violates the banded-matrix contract
    /// (zero extreme diagonal, non-finite entry, bad offset set, ...).
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    /// The tail certificate cannot bound the requested quantity.
    #[error("tail certificate cannot certify {0}")]
    TailUnavailable(String),

    /// Requested moment diverges under the given certificate.
    #[error("moment of order {order} not certified finite by the tail")]
    DivergentMoment { order: usize },

    /// Green kernel evaluated at one of its poles.
    #[error("Green kernel pole at z = {0}")]
    KernelPole(Complex64),

    /// Neither evaluation route is applicable at this `z`.
    #[error("no Jost evaluation route at z = {z}: {reason}")]
    RouteUnavailable { z: Complex64, reason: String },

    /// The factorial majorant cannot certify the requested tolerance.
    #[error("successive approximations: majorant x = {majorant:.3e} cannot reach tol = {tol:.3e}")]
    NonConvergentMajorant { majorant: f64, tol: f64 },

    /// sup q_n >= 1, so the efficient constant of the enclosure bounds
    /// does not exist.
    #[error("bound unavailable: sup q_n = {q} >= 1")]
    QTooLarge { q: f64 },

    /// Chosen truncation horizon is too small for the requested tolerance.
    #[error("horizon {horizon} too small: certified tail {tail:.3e} exceeds tol {tol:.3e}")]
    HorizonTooSmall { horizon: usize, tail: f64, tol: f64 },

    /// QR iteration failed to deflate within the sweep budget.
    #[error("eigenvalue iteration did not converge ({converged} of {size} deflated)")]
    EigenNonConvergence { size: usize, converged: usize },

    /// Periodic background with alpha != delta.
    #[error("background is not quasi-symmetric: alpha = {alpha}, delta = {delta}")]
    NotQuasiSymmetric { alpha: Complex64, delta: Complex64 },

    /// Internal consistency check failed (e.g. Naiman identity under both
    /// determinant conventions).
    #[error("internal consistency check failed: {0}")]
    Inconsistency(String),

    /// Malformed input document.
    #[error("input error: {0}")]
    Input(String),

    /// Precondition violation on an operation argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
