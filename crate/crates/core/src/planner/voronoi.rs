use serde::{Deserialize, Serialize};

use crate::agent::{AgentId, AgentState};
use crate::error::{Error, Result};
use crate::grid::{Cell, GridSpec, ObstacleMask};

/// Owner of every free cell; blocked cells have none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiPartition {
    spec: GridSpec,
    owner: Vec<Option<AgentId>>,
}

impl VoronoiPartition {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn owner(&self, cell: Cell) -> Option<AgentId> {
        self.owner[self.spec.index_unchecked(cell)]
    }

    pub fn owners(&self) -> &[Option<AgentId>] {
        &self.owner
    }

    pub fn cells_of(&self, id: AgentId) -> impl Iterator<Item = Cell> + '_ {
        self.owner
            .iter()
            .enumerate()
            .filter(move |(_, o)| **o == Some(id))
            .map(|(i, _)| self.spec.cell_at(i))
    }

    pub fn count(&self, id: AgentId) -> usize {
        self.owner.iter().filter(|o| **o == Some(id)).count()
    }
}

/// Nearest-agent partition of the free cells by squared Euclidean distance
/// (exact in integers); ties go to the lower agent id.
pub fn voronoi_partition(agents: &[AgentState], mask: &ObstacleMask) -> Result<VoronoiPartition> {
    if agents.is_empty() {
        return Err(Error::NoAgents);
    }
    let spec = *mask.spec();
    for a in agents {
        spec.check(a.position)?;
    }
    let owner = spec
        .cells()
        .map(|c| {
            if mask.is_blocked(c) {
                return None;
            }
            agents
                .iter()
                .min_by_key(|a| (a.position.distance2(c), a.id))
                .map(|a| a.id)
        })
        .collect();
    Ok(VoronoiPartition { spec, owner })
}
