//! Field coordinator for human operators carrying sensors: converts GPS
//! fixes to grid cells, krigs each new reading, hands out goals and keeps
//! a replayable event log per session.

pub mod api;
pub mod config;
pub mod engine;
pub mod error;
pub mod events;
pub mod geo;
pub mod store;

pub use api::{router, Coordinator};
pub use config::{FieldStrategy, PlacementMode, SessionConfig};
pub use engine::{Directive, Session, Snapshot};
pub use error::{FieldError, Result};
pub use events::{Event, EventKind, FieldReading, Fix};
pub use geo::{GeoPoint, Projection};
