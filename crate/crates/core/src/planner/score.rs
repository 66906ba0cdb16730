use std::sync::Arc;

use crate::agent::{AgentId, AgentState};
use crate::error::{Error, Result};
use crate::geostat::ReconstructedMap;
use crate::grid::{Cell, GridMap, MapKind, ObstacleMask};
use crate::scalar::Scalar;

use super::normalize01;
use super::voronoi::{voronoi_partition, VoronoiPartition};
use super::weights::ScoreWeights;

/// One agent's score map and the partition it was computed against.
#[derive(Debug, Clone)]
pub struct ScoreMap<T> {
    pub agent: AgentId,
    pub score: GridMap<T>,
    pub partition: Arc<VoronoiPartition>,
    /// Whose Voronoi cells form this agent's search region. Normally the
    /// agent itself; an agent sharing a cell with a lower id inherits that
    /// agent's region.
    pub region: AgentId,
}

impl<T: Scalar> ScoreMap<T> {
    pub fn owns(&self, cell: Cell) -> bool {
        self.partition.owner(cell) == Some(self.region)
    }
}

/// Terms shared by every agent in one planning round.
#[derive(Debug, Clone)]
pub struct ScorePlanner<T> {
    mask: ObstacleMask,
    weights: ScoreWeights,
    est: GridMap<T>,
    unc: GridMap<T>,
    center: GridMap<T>,
    partition: Arc<VoronoiPartition>,
}

fn distance_map<T: Scalar>(mask: &ObstacleMask, from: (f64, f64)) -> GridMap<T> {
    let raw = GridMap::from_fn(*mask.spec(), MapKind::Score, |c| {
        let dr = c.row as f64 - from.0;
        let dc = c.col as f64 - from.1;
        T::lit((dr * dr + dc * dc).sqrt())
    });
    normalize01(&raw, mask)
}

fn point(c: Cell) -> (f64, f64) {
    (c.row as f64, c.col as f64)
}

impl<T: Scalar> ScorePlanner<T> {
    pub fn new(
        recon: &ReconstructedMap<T>,
        agents: &[AgentState],
        weights: ScoreWeights,
        mask: &ObstacleMask,
    ) -> Result<Self> {
        mask.matches(&recon.estimate)?;
        mask.matches(&recon.uncertainty)?;
        let partition = Arc::new(voronoi_partition(agents, mask)?);
        Ok(Self {
            mask: mask.clone(),
            weights,
            est: normalize01(&recon.estimate, mask),
            unc: normalize01(&recon.uncertainty, mask),
            center: distance_map(mask, mask.spec().center_point()),
            partition,
        })
    }

    pub fn partition(&self) -> &Arc<VoronoiPartition> {
        &self.partition
    }

    pub fn score_for(&self, agent: &AgentState) -> ScoreMap<T> {
        let w = &self.weights;
        let (w_ev, w_unc, w_center, w_close) = (
            T::lit(w.expected_value),
            T::lit(w.uncertainty),
            T::lit(w.prefer_center),
            T::lit(w.prefer_closeness),
        );
        let close: GridMap<T> = distance_map(&self.mask, point(agent.position));
        let goal = agent
            .goal
            .map(|g| (T::lit(w.prefer_current_goal), distance_map::<T>(&self.mask, point(g))));
        let one = T::one();
        let values = (0..self.mask.spec().len())
            .map(|i| {
                if self.mask.blocked()[i] {
                    return T::zero();
                }
                let mut s = w_ev * self.est.values()[i]
                    + w_unc * self.unc.values()[i]
                    + w_center * (one - self.center.values()[i])
                    + w_close * (one - close.values()[i]);
                if let Some((w_goal, d)) = &goal {
                    s += *w_goal * (one - d.values()[i]);
                }
                s
            })
            .collect();
        let region = self
            .partition
            .owner(agent.position)
            .filter(|&o| o != agent.id && self.partition.count(agent.id) == 0)
            .unwrap_or(agent.id);
        ScoreMap {
            agent: agent.id,
            score: GridMap::new(*self.mask.spec(), MapKind::Score, values).expect("shape"),
            partition: Arc::clone(&self.partition),
            region,
        }
    }
}

/// Score map for one agent:
/// `w_ev·Ê + w_unc·Û + w_center·(1 − D̂center) + w_close·(1 − D̂agent) + w_goal·(1 − D̂goal)`,
/// each hatted term min-max normalised over free cells. The goal term is
/// dropped when the agent has no goal; blocked cells score 0.
pub fn compute_score<T: Scalar>(
    recon: &ReconstructedMap<T>,
    agent: &AgentState,
    all_agents: &[AgentState],
    weights: ScoreWeights,
    mask: &ObstacleMask,
) -> Result<ScoreMap<T>> {
    Ok(ScorePlanner::new(recon, all_agents, weights, mask)?.score_for(agent))
}

/// Highest-scoring cell in the agent's region, lowest index on ties. The
/// agent's own cell is only chosen when nothing else is available.
pub fn select_goal<T: Scalar>(score: &ScoreMap<T>, agent: &AgentState) -> Result<Cell> {
    select_goal_excluding(score, agent, &[])
}

/// As [`select_goal`], additionally skipping `exclude` unless that would
/// leave no candidate.
pub fn select_goal_excluding<T: Scalar>(
    score: &ScoreMap<T>,
    agent: &AgentState,
    exclude: &[Cell],
) -> Result<Cell> {
    let pick = |skip: &dyn Fn(Cell) -> bool| {
        let mut best: Option<(Cell, T)> = None;
        for c in score.partition.cells_of(score.region) {
            if skip(c) {
                continue;
            }
            let s = score.score.get(c);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best.map(|b| b.0)
    };
    pick(&|c| c == agent.position || exclude.contains(&c))
        .or_else(|| pick(&|c| c == agent.position))
        .or_else(|| pick(&|_| false))
        .ok_or(Error::EmptyRegion(agent.id.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn recon(spec: GridSpec, est: Vec<f64>, unc: Vec<f64>) -> ReconstructedMap<f64> {
        ReconstructedMap {
            estimate: GridMap::new(spec, MapKind::Estimate, est).unwrap(),
            uncertainty: GridMap::new(spec, MapKind::Uncertainty, unc).unwrap(),
            n_measurements_used: 3,
            burn_in: false,
            model: None,
        }
    }

    fn only(field: &str, v: f64) -> ScoreWeights {
        let mut w = ScoreWeights {
            expected_value: 0.0,
            uncertainty: 0.0,
            prefer_center: 0.0,
            prefer_closeness: 0.0,
            prefer_current_goal: 0.0,
            step_cost: 0.01,
        };
        w.set(field, v).unwrap();
        w
    }

    #[test]
    fn single_term_cases() {
        let spec = GridSpec::square(4).unwrap();
        let mask = ObstacleMask::open(spec);
        let est: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
        let r = recon(spec, est.clone(), vec![2.0; 16]);
        let a = AgentState::new(AgentId(0), Cell::new(0, 0));

        let s = compute_score(&r, &a, &[a.clone()], only("weight_uncertainty", 1.0), &mask).unwrap();
        assert!(s.score.values().iter().all(|&v| v == 0.0));

        let s = compute_score(&r, &a, &[a.clone()], only("weight_expected_value", 1.0), &mask).unwrap();
        let norm = normalize01(&r.estimate, &mask);
        assert_eq!(s.score.values(), norm.values());
    }

    #[test]
    fn goal_selection_rules() {
        // second row is all zeros
        let spec = GridSpec::new(2, 6, 1.0).unwrap();
        let mask = ObstacleMask::open(spec);
        let recon = |_: GridSpec, top: Vec<f64>, unc: Vec<f64>| {
            let mut est = top;
            est.extend([0.0; 6]);
            recon(spec, est, unc.repeat(2))
        };
        let a = AgentState::new(AgentId(0), Cell::new(0, 0));
        let b = AgentState::new(AgentId(1), Cell::new(0, 5));
        let w = only("weight_expected_value", 1.0);

        // single peak
        let r = recon(spec, vec![0.0, 0.0, 5.0, 0.0, 0.0, 0.0], vec![1.0; 6]);
        let s = compute_score(&r, &a, &[a.clone()], w, &mask).unwrap();
        assert_eq!(select_goal(&s, &a).unwrap(), Cell::new(0, 2));

        // tie goes to the lower index
        let r = recon(spec, vec![0.0, 3.0, 0.0, 3.0, 0.0, 0.0], vec![1.0; 6]);
        let s = compute_score(&r, &a, &[a.clone()], w, &mask).unwrap();
        assert_eq!(select_goal(&s, &a).unwrap(), Cell::new(0, 1));

        // global peak in b's region; a picks its own best instead
        let r = recon(spec, vec![0.0, 1.0, 2.0, 0.0, 9.0, 0.0], vec![1.0; 6]);
        let agents = [a.clone(), b.clone()];
        let s = compute_score(&r, &a, &agents, w, &mask).unwrap();
        assert_eq!(select_goal(&s, &a).unwrap(), Cell::new(0, 2));
        let s = compute_score(&r, &b, &agents, w, &mask).unwrap();
        assert_eq!(select_goal(&s, &b).unwrap(), Cell::new(0, 4));

        // never the own cell while other cells are owned
        let r = recon(spec, vec![9.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![1.0; 6]);
        let s = compute_score(&r, &a, &[a.clone()], w, &mask).unwrap();
        assert_ne!(select_goal(&s, &a).unwrap(), a.position);
    }

    #[test]
    fn colocated_agent_inherits_region() {
        let spec = GridSpec::square(5).unwrap();
        let mask = ObstacleMask::open(spec);
        let a = AgentState::new(AgentId(0), Cell::new(2, 2));
        let b = AgentState::new(AgentId(1), Cell::new(2, 2));
        let r = recon(spec, (0..25).map(|i| i as f64).collect(), vec![1.0; 25]);
        let agents = [a.clone(), b.clone()];
        let w = only("weight_expected_value", 1.0);
        let sa = compute_score(&r, &a, &agents, w, &mask).unwrap();
        let sb = compute_score(&r, &b, &agents, w, &mask).unwrap();
        assert_eq!(sb.region, AgentId(0));
        let ga = select_goal(&sa, &a).unwrap();
        let gb = select_goal_excluding(&sb, &b, &[ga]).unwrap();
        assert_ne!(ga, gb);
    }
}
