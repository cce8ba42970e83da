use thiserror::Error;

use crate::geometry::Wing;
use crate::rational::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block measures sum to {sum}, expected 1")]
    MeasureSum { sum: Rational },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("conditioning event has measure zero")]
    ZeroCondition,

    #[error("empty cell: {0}")]
    EmptyCell(String),

    #[error("rate reports do not share keys: {}", .0.join(", "))]
    KeyMismatch(Vec<String>),

    #[error("{station} stream is not strictly increasing at record {index}")]
    UnsortedStream { station: Wing, index: usize },

    #[error("strategy space of {count} pairs exceeds the cap of {cap}")]
    SizeCap { count: u128, cap: u128 },

    #[error("quantum targets do not match the geometry: {0}")]
    TargetMismatch(String),

    #[error("negative weight {value} for strategy {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, expected 1")]
    Normalization { sum: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
