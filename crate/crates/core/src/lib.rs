//! Score-biased adaptive spatial sampling.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

pub mod agent;
pub mod envgen;
pub mod error;
pub mod geostat;
pub mod grid;
pub mod metrics;
pub mod planner;
pub mod scalar;
pub mod stats;
pub mod strategies;

pub use agent::{AgentId, AgentState, Measurement, MeasurementLog};
pub use error::{Error, Result};
pub use grid::{cell_index, neighbors8, Cell, GridMap, GridSpec, MapKind, Neighbor, ObstacleMask};
pub use scalar::Scalar;

pub type GridMapF64 = GridMap<f64>;
pub type GridMapF32 = GridMap<f32>;
pub type MeasurementLogF64 = MeasurementLog<f64>;
pub type ReconstructedMapF64 = geostat::ReconstructedMap<f64>;
