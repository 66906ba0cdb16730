//! The append-only session record.

use serde::{Deserialize, Serialize};
use sbs_core::{AgentId, Cell, GridMap};

use crate::config::{PlacementMode, SessionConfig};

/// A GPS fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub accuracy_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldReading {
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub accuracy_m: f64,
    /// Volumetric water content, m³/m³. The mapped variable.
    pub vwc: f64,
    /// Electrical conductivity, µS/cm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ec: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp_c: Option<f64>,
    /// Client clock, ms since the Unix epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_ts: Option<u64>,
}

impl FieldReading {
    pub fn fix(&self) -> Fix {
        Fix {
            lat: self.lat,
            lon: self.lon,
            accuracy_m: self.accuracy_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum EventKind {
    SessionCreated {
        session_id: String,
        config: SessionConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truth: Option<GridMap<f64>>,
    },
    AgentJoined {
        agent_id: AgentId,
        placement: PlacementMode,
        waypoint: Option<Cell>,
    },
    FixReported {
        agent_id: AgentId,
        fix: Fix,
    },
    ReadingAccepted {
        agent_id: AgentId,
        reading: FieldReading,
        cell: Cell,
        token: String,
    },
    /// `cell` is the operator's next measurement cell, `target` the cell
    /// it is heading for.
    GoalAssigned {
        agent_id: AgentId,
        cell: Cell,
        target: Cell,
    },
}

/// One log line: `{seq, ts, type, payload}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// Server clock, ms since the Unix epoch.
    pub ts: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    /// Events a client caused, as opposed to ones the engine derived.
    pub fn is_input(&self) -> bool {
        !matches!(self.kind, EventKind::GoalAssigned { .. })
    }
}
