//! Simulated field operators for exercising a coordinator end to end.

pub mod api;
pub mod driver;
pub mod error;
pub mod operator;
pub mod transcript;

pub use api::{ApiError, HttpApi, LocalApi, SwarmApi};
pub use driver::{run_concurrent, run_virtual, FleetConfig, FleetRun};
pub use error::{OperatorError, Result};
pub use operator::{Compliance, Operator, OperatorModel, OperatorRun, Tick, DEFAULT_GPS_SIGMA_M};
pub use transcript::{read_transcript, resubmit, write_transcripts, Request, Response, TranscriptEntry};
