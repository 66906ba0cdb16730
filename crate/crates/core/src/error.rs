use thiserror::Error;

use crate::grid::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("cell ({row}, {col}) outside {rows}x{cols} grid")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside domain [0, 1]")]
    Domain { value: f64 },

    #[error("degenerate field: constant output before normalization (seed {seed}); retry with another seed")]
    DegenerateField { seed: u64 },

    #[error("obstacle layout `{name}` invalid: {reason}")]
    Layout { name: String, reason: String },

    #[error("insufficient data: need at least {needed} distinct points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("variogram fit needs at least 3 non-empty bins, got {0}")]
    TooFewBins(usize),

    #[error("kriging system is singular: {0}")]
    Singular(String),

    #[error("no agents supplied")]
    NoAgents,

    #[error("agent {0} owns no cells")]
    EmptyRegion(u32),

    #[error("no path from {from} to {to}")]
    NoPath { from: Cell, to: Cell },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("agent {agent} at {at} is enclosed")]
    Enclosed { agent: u32, at: Cell },

    #[error("measurement log: {0}")]
    Log(String),
}
