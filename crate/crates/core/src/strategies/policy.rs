use rand::Rng;

use crate::agent::AgentState;
use crate::error::{Error, Result};
use crate::grid::{neighbors8, Cell, ObstacleMask};
use crate::planner::{route_astar, route_shortest, select_goal_excluding, ScorePlanner, ScoreWeights};
use crate::scalar::Scalar;

/// A goal and the route toward it, starting at the agent's position.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub goal: Cell,
    pub route: Vec<Cell>,
}

impl Plan {
    /// The cell to occupy after one step.
    pub fn next(&self) -> Cell {
        self.route.get(1).copied().unwrap_or(self.route[0])
    }
}

fn ensure_not_enclosed(agent: &AgentState, mask: &ObstacleMask) -> Result<()> {
    if mask.free_count() > 1 && neighbors8(mask, agent.position).next().is_none() {
        return Err(Error::Enclosed {
            agent: agent.id.0,
            at: agent.position,
        });
    }
    Ok(())
}

/// Score-biased search: re-selects the goal in the agent's Voronoi region
/// and re-routes by A* over the score map every round. `exclude` lists
/// goals already taken this round by co-located agents.
pub fn sbs_policy<T: Scalar>(
    planner: &ScorePlanner<T>,
    agent: &AgentState,
    weights: &ScoreWeights,
    mask: &ObstacleMask,
    exclude: &[Cell],
) -> Result<Plan> {
    ensure_not_enclosed(agent, mask)?;
    let score = planner.score_for(agent);
    let goal = select_goal_excluding(&score, agent, exclude)?;
    let route = route_astar(agent.position, goal, &score.score, weights, mask)?;
    Ok(Plan { goal, route })
}

/// Point-to-point: the goal is chosen exactly as in SBS but then frozen
/// until reached, and routes minimise distance only.
pub fn ptp_policy<T: Scalar>(
    planner: &ScorePlanner<T>,
    agent: &AgentState,
    mask: &ObstacleMask,
    exclude: &[Cell],
) -> Result<Plan> {
    ensure_not_enclosed(agent, mask)?;
    if let Some(plan) = continue_route(agent) {
        return Ok(plan);
    }
    let score = planner.score_for(agent);
    let goal = select_goal_excluding(&score, agent, exclude)?;
    let route = route_shortest::<T>(agent.position, goal, mask)?;
    Ok(Plan { goal, route })
}

/// Uninformed wandering: a uniformly random free goal, walked by the
/// shortest path, then another.
pub fn wandering_policy(agent: &AgentState, mask: &ObstacleMask, rng: &mut impl Rng) -> Result<Plan> {
    ensure_not_enclosed(agent, mask)?;
    if let Some(plan) = continue_route(agent) {
        return Ok(plan);
    }
    let free: Vec<Cell> = mask.free_cells().filter(|&c| c != agent.position).collect();
    if free.is_empty() {
        return Ok(Plan {
            goal: agent.position,
            route: vec![agent.position],
        });
    }
    let goal = free[rng.random_range(0..free.len())];
    let route = route_shortest::<f64>(agent.position, goal, mask)?;
    Ok(Plan { goal, route })
}

/// The stored route when the agent has an unreached goal.
pub(super) fn continue_route(agent: &AgentState) -> Option<Plan> {
    let goal = agent.goal?;
    let route = agent.planned_route.as_ref()?;
    (goal != agent.position && route.first() == Some(&agent.position) && route.last() == Some(&goal))
        .then(|| Plan {
            goal,
            route: route.clone(),
        })
}
