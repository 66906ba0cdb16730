use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::agent::{AgentId, AgentState, MeasurementLog};
use crate::error::{Error, Result};
use crate::geostat::{ReconstructedMap, Reconstructor};
use crate::grid::{Cell, GridMap, ObstacleMask};
use crate::planner::ScorePlanner;
use crate::scalar::Scalar;

use super::placement::initial_positions;
use super::policy::{continue_route, ptp_policy, sbs_policy, wandering_policy, Plan};
use super::spiral::{check_spiral, spiral_cells};
use super::{Placement, StrategyConfig, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: AgentId,
    pub pos: Cell,
    pub goal: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SampleRecord<T> {
    pub agent: AgentId,
    pub pos: Cell,
    pub value: T,
}

/// State after one round: where each agent sampled and what it sampled.
/// Round 0 holds the initial samples taken before any move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RoundRecord<T> {
    pub round: usize,
    pub agents: Vec<AgentSnapshot>,
    pub measurements: Vec<SampleRecord<T>>,
}

#[derive(Debug, Clone)]
pub struct StepTrace<T> {
    pub config: StrategyConfig,
    pub rounds: Vec<RoundRecord<T>>,
    pub log: MeasurementLog<T>,
    pub final_recon: ReconstructedMap<T>,
}

impl<T: Scalar> StepTrace<T> {
    /// Rounds in which agents moved (excludes the initial sampling round).
    pub fn movement_rounds(&self) -> usize {
        self.rounds.len().saturating_sub(1)
    }

    /// Total agent moves over the episode.
    pub fn movement_samples(&self) -> usize {
        self.rounds.iter().skip(1).map(|r| r.measurements.len()).sum()
    }

    pub fn visited_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.rounds.iter().flat_map(|r| r.agents.iter().map(|a| a.pos))
    }

    /// One JSON object per round.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for r in &self.rounds {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Runs one synchronous episode. See [`run_episode_with`].
pub fn run_episode<T: Scalar>(
    truth: &GridMap<T>,
    mask: &ObstacleMask,
    config: &StrategyConfig,
) -> Result<StepTrace<T>> {
    run_episode_with(truth, mask, config, |_, _| {})
}

/// Runs one episode, calling `observer(round, recon)` after the initial
/// samples (round 0) and after every movement round.
///
/// Each round every agent plans from the positions at the start of the
/// round, takes one step and samples its new cell; the shared log then
/// updates and the map is reconstructed.
pub fn run_episode_with<T: Scalar>(
    truth: &GridMap<T>,
    mask: &ObstacleMask,
    config: &StrategyConfig,
    mut observer: impl FnMut(usize, &ReconstructedMap<T>),
) -> Result<StepTrace<T>> {
    config.validate()?;
    mask.matches(truth)?;
    let spec = *mask.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let noise = if config.sensor_noise_sigma > 0.0 {
        Some(
            Normal::new(0.0, config.sensor_noise_sigma)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?,
        )
    } else {
        None
    };
    let steps = config.steps_per_agent();

    let spiral = if config.kind == StrategyKind::Spiral {
        if config.num_agents != 1 {
            return Err(Error::Unsupported("spiral search is single-agent".into()));
        }
        let cells = spiral_cells(&spec, steps)?;
        check_spiral(mask, &cells)?;
        let ok_start = match &config.placement {
            Placement::Center => true,
            Placement::Explicit(c) => c.as_slice() == [cells[0]],
            _ => false,
        };
        if !ok_start {
            return Err(Error::Unsupported("spiral search starts at the centre".into()));
        }
        Some(cells)
    } else {
        None
    };

    let starts = match &spiral {
        Some(cells) => vec![cells[0]],
        None => initial_positions(&config.placement, config.num_agents, mask, &mut rng)?,
    };
    let mut agents: Vec<AgentState> = starts
        .iter()
        .enumerate()
        .map(|(i, &c)| AgentState::new(AgentId(i as u32), c))
        .collect();

    let mut log = MeasurementLog::new();
    let mut recon_engine = Reconstructor::new(mask.clone());
    let mut rounds = Vec::with_capacity(steps + 1);

    let sample = |agents: &[AgentState], round: usize, log: &mut MeasurementLog<T>, rng: &mut ChaCha8Rng| -> Result<RoundRecord<T>> {
        let mut measurements = Vec::with_capacity(agents.len());
        for a in agents {
            let mut v = truth.get(a.position);
            if let Some(n) = &noise {
                v += T::lit(n.sample(rng));
            }
            log.record(a.id, a.position, v)?;
            measurements.push(SampleRecord {
                agent: a.id,
                pos: a.position,
                value: v,
            });
        }
        Ok(RoundRecord {
            round,
            agents: agents
                .iter()
                .map(|a| AgentSnapshot {
                    id: a.id,
                    pos: a.position,
                    goal: a.goal,
                })
                .collect(),
            measurements,
        })
    };

    rounds.push(sample(&agents, 0, &mut log, &mut rng)?);
    let mut recon = recon_engine.reconstruct(&log)?;
    observer(0, &recon);

    for round in 1..=steps {
        let snapshot = agents.clone();
        let mut planner: Option<ScorePlanner<T>> = None;
        let mut chosen: Vec<(Cell, Cell)> = Vec::new();
        for (i, agent) in snapshot.iter().enumerate() {
            let exclude: Vec<Cell> = chosen
                .iter()
                .filter(|(pos, _)| *pos == agent.position)
                .map(|&(_, g)| g)
                .collect();
            let plan = match config.kind {
                StrategyKind::Sbs => sbs_policy(lazy_planner(&mut planner, &recon, &snapshot, config, mask)?, agent, &config.weights, mask, &exclude)?,
                StrategyKind::Ptp => match continue_route(agent) {
                    Some(plan) => plan,
                    None => ptp_policy(lazy_planner(&mut planner, &recon, &snapshot, config, mask)?, agent, mask, &exclude)?,
                },
                StrategyKind::Wandering => wandering_policy(agent, mask, &mut rng)?,
                StrategyKind::Spiral => {
                    let cells = spiral.as_ref().expect("spiral cells");
                    Plan {
                        goal: cells[round],
                        route: vec![agent.position, cells[round]],
                    }
                }
            };
            chosen.push((agent.position, plan.goal));
            let next = plan.next();
            if mask.is_blocked(next) || !spec.contains(next) {
                return Err(Error::InvalidParameter(format!("policy produced blocked cell {next}")));
            }
            let a = &mut agents[i];
            a.position = next;
            a.steps_taken += 1;
            if config.kind == StrategyKind::Spiral {
                a.goal = None;
                a.planned_route = None;
            } else {
                a.goal = Some(plan.goal);
                let rest = if plan.route.len() > 1 {
                    plan.route[1..].to_vec()
                } else {
                    plan.route.clone()
                };
                a.planned_route = Some(rest);
            }
        }
        rounds.push(sample(&agents, round, &mut log, &mut rng)?);
        recon = recon_engine.reconstruct(&log)?;
        observer(round, &recon);
    }

    Ok(StepTrace {
        config: config.clone(),
        rounds,
        log,
        final_recon: recon,
    })
}

fn lazy_planner<'a, T: Scalar>(
    slot: &'a mut Option<ScorePlanner<T>>,
    recon: &ReconstructedMap<T>,
    agents: &[AgentState],
    config: &StrategyConfig,
    mask: &ObstacleMask,
) -> Result<&'a ScorePlanner<T>> {
    if slot.is_none() {
        *slot = Some(ScorePlanner::new(recon, agents, config.weights, mask)?);
    }
    Ok(slot.as_ref().expect("built above"))
}
