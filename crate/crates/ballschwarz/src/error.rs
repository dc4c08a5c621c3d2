//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("ball {index} is invalid: {msg}")]
    InvalidBall { index: usize, msg: String },

    #[error("geometry is empty")]
    EmptyGeometry,

    #[error("geometry is disconnected: {msg}")]
    Disconnected { msg: String },

    #[error("ball {inner} is contained in ball {outer}")]
    Containment { inner: usize, outer: usize },

    #[error("exterior cone condition fails: sampled cone angle {beta_min} <= 0")]
    ConeConditionViolated { beta_min: f64 },

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: [f64; 3] },

    #[error("grid of {nodes} nodes exceeds the cap of {cap}; increase h")]
    GridTooLarge { nodes: usize, cap: usize },

    #[error("subdomain {index} received no grid nodes; decrease h")]
    EmptySubdomain { index: usize },

    #[error("no interior balls: coarse space is empty")]
    EmptyCoarseSpace,

    #[error("factorization of subdomain {index} failed: {msg}")]
    Factorization { index: usize, msg: String },

    #[error("matrix is not positive definite: {msg}")]
    NotPositiveDefinite { msg: String },

    #[error("{what} is not finite")]
    NonFinite { what: String },

    #[error("invalid argument: {msg}")]
    InvalidArgument { msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument { msg: msg.into() }
    }
}
