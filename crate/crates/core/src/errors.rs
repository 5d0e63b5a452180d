//! Error types. Truncation is always reported explicitly, never silent.

use crate::bidegree::BiDegree;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum EngineError {
    #[error("window truncation at {deg}: {what}")]
    Truncation { deg: BiDegree, what: String },

    #[error("unresolved image label `{label}` at {deg} (target has rank {rank} there)")]
    UnresolvedImage { label: String, deg: BiDegree, rank: usize },

    #[error("duplicate basis label `{label}` at {deg}")]
    DuplicateLabel { label: String, deg: BiDegree },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("incompatible regime: {0}")]
    Regime(String),

    #[error("route mismatch at {deg}: {left} vs {right} ({context})")]
    RouteMismatch { deg: BiDegree, left: usize, right: usize, context: String },

    #[error("missing Sq^2 data for `{0}`")]
    MissingSqData(String),

    #[error("coproduct data not implemented for Q_{0}; need the closed-form route")]
    UnsupportedCoproduct(u32),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EngineError>;
