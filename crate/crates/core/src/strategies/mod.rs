//! Mapping strategies and the synchronous episode loop.

mod episode;
mod placement;
mod policy;
mod spiral;

pub use episode::{
    run_episode, run_episode_with, AgentSnapshot, RoundRecord, SampleRecord, StepTrace,
};
pub use placement::initial_positions;
pub use policy::{ptp_policy, sbs_policy, wandering_policy, Plan};
pub use spiral::{spiral_cells, spiral_policy};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Cell;
use crate::planner::ScoreWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Sbs,
    Ptp,
    Spiral,
    Wandering,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [Self::Sbs, Self::Ptp, Self::Spiral, Self::Wandering];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sbs => "sbs",
            Self::Ptp => "ptp",
            Self::Spiral => "spiral",
            Self::Wandering => "wandering",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Centre cell, then the nearest free cells around it.
    Center,
    /// Evenly spaced along the boundary.
    Edges,
    /// Distinct uniformly random free cells.
    Random,
    Explicit(Vec<Cell>),
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Self::Center),
            "edges" => Ok(Self::Edges),
            "random" => Ok(Self::Random),
            _ => Err(Error::InvalidParameter(format!("unknown placement `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub weights: ScoreWeights,
    pub total_step_budget: usize,
    pub num_agents: usize,
    pub placement: Placement,
    pub rng_seed: u64,
    /// Gaussian sensor noise; 0 reads the truth exactly.
    #[serde(default)]
    pub sensor_noise_sigma: f64,
}

pub const DEFAULT_BUDGET: usize = 800;

impl StrategyConfig {
    pub fn new(kind: StrategyKind, num_agents: usize) -> Self {
        Self {
            kind,
            weights: ScoreWeights::for_agents(num_agents),
            total_step_budget: DEFAULT_BUDGET,
            num_agents,
            placement: Placement::Center,
            rng_seed: 0,
            sensor_noise_sigma: 0.0,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.total_step_budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn with_weights(mut self, weights: ScoreWeights) -> Self {
        self.weights = weights;
        self
    }

    /// Movement steps each agent takes.
    pub fn steps_per_agent(&self) -> usize {
        self.total_step_budget / self.num_agents.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 {
            return Err(Error::NoAgents);
        }
        if self.steps_per_agent() == 0 {
            return Err(Error::InvalidParameter(format!(
                "budget {} leaves no steps for {} agents",
                self.total_step_budget, self.num_agents
            )));
        }
        if !(self.sensor_noise_sigma.is_finite() && self.sensor_noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter("sensor noise must be >= 0".into()));
        }
        if matches!(self.kind, StrategyKind::Sbs | StrategyKind::Ptp) {
            self.weights.validate()?;
        }
        if let Placement::Explicit(cells) = &self.placement {
            if cells.len() != self.num_agents {
                return Err(Error::InvalidParameter(format!(
                    "{} explicit positions for {} agents",
                    cells.len(),
                    self.num_agents
                )));
            }
        }
        Ok(())
    }
}
