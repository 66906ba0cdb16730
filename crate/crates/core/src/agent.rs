//! Agents and the shared measurement log.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{neighbors8, Cell, ObstacleMask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Measurement<T> {
    pub agent_id: AgentId,
    pub cell: Cell,
    pub value: T,
    pub sequence: u64,
    /// Wall-clock milliseconds since the Unix epoch (field sessions only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<u64>,
}

/// Measurements in global arrival order. Repeated cells are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "LogWire<T>", into = "LogWire<T>")]
pub struct MeasurementLog<T> {
    entries: Vec<Measurement<T>>,
    last_seq: HashMap<AgentId, u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct LogWire<T> {
    entries: Vec<Measurement<T>>,
}

impl<T: Scalar> TryFrom<LogWire<T>> for MeasurementLog<T> {
    type Error = Error;

    fn try_from(w: LogWire<T>) -> Result<Self> {
        let mut log = Self::default();
        for m in w.entries {
            log.push(m)?;
        }
        Ok(log)
    }
}

impl<T: Scalar> From<MeasurementLog<T>> for LogWire<T> {
    fn from(log: MeasurementLog<T>) -> Self {
        Self { entries: log.entries }
    }
}

impl<T: Scalar> Default for MeasurementLog<T> {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            last_seq: HashMap::new(),
        }
    }
}

impl<T: Scalar> MeasurementLog<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: Measurement<T>) -> Result<()> {
        if !m.value.is_finite() {
            return Err(Error::Log(format!("non-finite value from agent {}", m.agent_id)));
        }
        if let Some(&prev) = self.last_seq.get(&m.agent_id) {
            if m.sequence <= prev {
                return Err(Error::Log(format!(
                    "sequence {} for agent {} not after {prev}",
                    m.sequence, m.agent_id
                )));
            }
        }
        self.last_seq.insert(m.agent_id, m.sequence);
        self.entries.push(m);
        Ok(())
    }

    /// Appends a reading with the next sequence number for `agent`.
    pub fn record(&mut self, agent: AgentId, cell: Cell, value: T) -> Result<()> {
        let sequence = self.last_seq.get(&agent).map_or(0, |s| s + 1);
        self.push(Measurement {
            agent_id: agent,
            cell,
            value,
            sequence,
            timestamp_ms: None,
        })
    }

    pub fn entries(&self) -> &[Measurement<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn distinct_cells(&self) -> usize {
        let mut cells: Vec<Cell> = self.entries.iter().map(|m| m.cell).collect();
        cells.sort_unstable();
        cells.dedup();
        cells.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Cell,
    pub goal: Option<Cell>,
    pub steps_taken: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planned_route: Option<Vec<Cell>>,
}

impl AgentState {
    pub fn new(id: AgentId, position: Cell) -> Self {
        Self {
            id,
            position,
            goal: None,
            steps_taken: 0,
            planned_route: None,
        }
    }

    /// Checks placement on free cells and route shape.
    pub fn validate(&self, mask: &ObstacleMask) -> Result<()> {
        if !mask.is_free(self.position) {
            return Err(Error::InvalidParameter(format!(
                "agent {} on non-free cell {}",
                self.id, self.position
            )));
        }
        if let Some(goal) = self.goal {
            if !mask.is_free(goal) {
                return Err(Error::InvalidParameter(format!(
                    "agent {} goal {goal} not free",
                    self.id
                )));
            }
        }
        if let Some(route) = &self.planned_route {
            let ok_ends = route.first() == Some(&self.position) && route.last() == self.goal.as_ref();
            let ok_steps = route
                .windows(2)
                .all(|w| neighbors8(mask, w[0]).any(|n| n.cell == w[1]));
            if !(ok_ends && ok_steps) {
                return Err(Error::InvalidParameter(format!(
                    "agent {} has a malformed route",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn sequences_must_increase_per_agent() {
        let mut log = MeasurementLog::<f64>::new();
        log.record(AgentId(0), Cell::new(0, 0), 0.5).unwrap();
        log.record(AgentId(1), Cell::new(0, 0), 0.5).unwrap();
        log.record(AgentId(0), Cell::new(0, 1), 0.5).unwrap();
        let bad = Measurement {
            agent_id: AgentId(0),
            cell: Cell::new(1, 1),
            value: 0.1,
            sequence: 1,
            timestamp_ms: None,
        };
        assert!(log.push(bad).is_err());
        assert!(log.record(AgentId(2), Cell::new(0, 0), f64::NAN).is_err());
        assert_eq!(log.len(), 3);
        assert_eq!(log.distinct_cells(), 2);
    }

    #[test]
    fn route_validation() {
        let spec = GridSpec::square(4).unwrap();
        let mask = ObstacleMask::open(spec);
        let mut a = AgentState::new(AgentId(0), Cell::new(0, 0));
        a.goal = Some(Cell::new(2, 2));
        a.planned_route = Some(vec![Cell::new(0, 0), Cell::new(1, 1), Cell::new(2, 2)]);
        assert!(a.validate(&mask).is_ok());
        a.planned_route = Some(vec![Cell::new(0, 0), Cell::new(2, 2)]);
        assert!(a.validate(&mask).is_err());
    }
}
