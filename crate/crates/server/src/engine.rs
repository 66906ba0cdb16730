//! Session state machine. Every mutation appends events, and replaying
//! those events through the same operations rebuilds the state exactly.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sbs_core::geostat::{ReconstructedMap, Reconstructor, VariogramModel};
use sbs_core::metrics::{MetricEvaluator, MetricTimeline};
use sbs_core::planner::{route_astar, route_shortest, select_goal_excluding, ScorePlanner};
use sbs_core::{AgentId, AgentState, Cell, GridMap, MeasurementLog, ObstacleMask};

use crate::config::{FieldStrategy, PlacementMode, SessionConfig};
use crate::error::{FieldError, Result};
use crate::events::{Event, EventKind, FieldReading, Fix};
use crate::geo::{GeoPoint, Projection};

/// What an operator should do next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Directive {
    pub agent_id: AgentId,
    /// Next cell to measure; `None` before a first goal exists or once the
    /// session is complete.
    pub goal: Option<Cell>,
    pub goal_center: Option<GeoPoint>,
    /// Cell the goal is a step towards.
    pub target: Option<Cell>,
    /// From the last fix to the goal centre; 0 = north, clockwise.
    pub bearing_deg: Option<f64>,
    pub within_goal_cell: bool,
    pub readings: usize,
    pub reading_target: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub agent_id: AgentId,
    pub placement: PlacementMode,
    pub last_fix: Option<Fix>,
    pub fix_cell: Option<Cell>,
    /// Cell of the last accepted reading, used for planning.
    pub position: Option<Cell>,
    pub goal: Option<Cell>,
    pub target: Option<Cell>,
    pub readings: usize,
}

/// Read-only view of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session_id: String,
    pub config: SessionConfig,
    pub rows: usize,
    pub cols: usize,
    pub readings: usize,
    pub reading_target: usize,
    pub complete: bool,
    pub burn_in: bool,
    pub estimate: GridMap<f64>,
    pub uncertainty: GridMap<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<VariogramModel<f64>>,
    pub agents: Vec<AgentView>,
    pub events: u64,
    pub reading_events: usize,
    /// Per-reading metrics, when a reference truth map is attached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeline: Option<MetricTimeline>,
}

#[derive(Debug, Clone)]
struct Agent {
    view: AgentView,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    config: SessionConfig,
    proj: Projection,
    mask: ObstacleMask,
    truth: Option<GridMap<f64>>,
    evaluator: Option<MetricEvaluator<f64>>,
    timeline: MetricTimeline,
    agents: Vec<Agent>,
    log: MeasurementLog<f64>,
    reconstructor: Reconstructor<f64>,
    recon: ReconstructedMap<f64>,
    rng: ChaCha8Rng,
    tokens: HashMap<String, (AgentId, Directive)>,
    events: Vec<Event>,
}

fn check_finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(FieldError::Invalid(format!("{what} must be finite")))
    }
}

fn check_fix(fix: &Fix) -> Result<GeoPoint> {
    let p = GeoPoint::new(fix.lat, fix.lon);
    if !p.is_valid() {
        return Err(FieldError::Invalid(format!("bad position ({}, {})", fix.lat, fix.lon)));
    }
    check_finite("accuracy_m", fix.accuracy_m)?;
    if fix.accuracy_m < 0.0 {
        return Err(FieldError::Invalid("accuracy_m must be >= 0".into()));
    }
    Ok(p)
}

impl Session {
    pub fn create(id: impl Into<String>, config: SessionConfig, truth: Option<GridMap<f64>>, ts: u64) -> Result<Self> {
        config.validate()?;
        let spec = config.grid()?;
        let mask = ObstacleMask::open(spec);
        let evaluator = match &truth {
            Some(t) => {
                if (t.spec().rows(), t.spec().cols()) != (spec.rows(), spec.cols()) {
                    return Err(FieldError::Invalid(format!(
                        "truth map is {}x{}, field is {}x{}",
                        t.spec().rows(),
                        t.spec().cols(),
                        spec.rows(),
                        spec.cols()
                    )));
                }
                let t = GridMap::new(spec, t.kind(), t.values().to_vec())?;
                Some(MetricEvaluator::new(&t, &mask)?)
            }
            None => None,
        };
        let id = id.into();
        let mut s = Self {
            proj: Projection::new(config.origin, config.cell_size_m, spec.rows(), spec.cols()),
            recon: ReconstructedMap::burn_in(spec, &mask, &[]),
            reconstructor: Reconstructor::new(mask.clone()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            mask,
            evaluator,
            timeline: MetricTimeline::default(),
            agents: Vec::new(),
            log: MeasurementLog::new(),
            tokens: HashMap::new(),
            events: Vec::new(),
            truth: truth.clone(),
            config: config.clone(),
            id: id.clone(),
        };
        s.push(
            ts,
            EventKind::SessionCreated {
                session_id: id,
                config,
                truth,
            },
        );
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn projection(&self) -> &Projection {
        &self.proj
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn recon(&self) -> &ReconstructedMap<f64> {
        &self.recon
    }

    pub fn log(&self) -> &MeasurementLog<f64> {
        &self.log
    }

    pub fn readings(&self) -> usize {
        self.log.len()
    }

    pub fn is_complete(&self) -> bool {
        self.log.len() >= self.config.reading_target
    }

    pub fn timeline(&self) -> Option<&MetricTimeline> {
        self.evaluator.as_ref().map(|_| &self.timeline)
    }

    fn push(&mut self, ts: u64, kind: EventKind) {
        let seq = self.events.len() as u64 + 1;
        self.events.push(Event { seq, ts, kind });
    }

    fn agent(&self, id: AgentId) -> Result<&Agent> {
        self.agents.get(id.0 as usize).ok_or(FieldError::UnknownAgent(id.0))
    }

    /// Registers an operator. `placement` overrides the session default.
    pub fn join(&mut self, placement: Option<PlacementMode>, ts: u64) -> Result<(AgentId, Directive)> {
        if self.is_complete() {
            return Err(FieldError::Closed);
        }
        let placement = placement.unwrap_or(self.config.placement_mode);
        let id = AgentId(self.agents.len() as u32);
        let waypoint = self.waypoint(placement);
        self.agents.push(Agent {
            view: AgentView {
                agent_id: id,
                placement,
                last_fix: None,
                fix_cell: None,
                position: None,
                goal: waypoint,
                target: waypoint,
                readings: 0,
            },
        });
        self.push(
            ts,
            EventKind::AgentJoined {
                agent_id: id,
                placement,
                waypoint,
            },
        );
        Ok((id, self.directive(id)))
    }

    /// Start cell: the centre, or spread along the boundary, avoiding
    /// waypoints already handed out.
    fn waypoint(&self, placement: PlacementMode) -> Option<Cell> {
        let spec = *self.mask.spec();
        let anchor = match placement {
            PlacementMode::UserChoice => return None,
            PlacementMode::Center => spec.center_cell(),
            PlacementMode::Edges => {
                let (rows, cols) = (spec.rows(), spec.cols());
                let mut ring: Vec<Cell> = (0..cols).map(|c| Cell::new(0, c)).collect();
                ring.extend((1..rows).map(|r| Cell::new(r, cols - 1)));
                ring.extend((0..cols.saturating_sub(1)).rev().map(|c| Cell::new(rows - 1, c)));
                ring.extend((1..rows.saturating_sub(1)).rev().map(|r| Cell::new(r, 0)));
                let k = self.agents.iter().filter(|a| a.view.placement == PlacementMode::Edges).count();
                let golden = 0.618_033_988_749_894_9_f64;
                ring[((k as f64 * golden).fract() * ring.len() as f64) as usize % ring.len()]
            }
        };
        let taken: Vec<Cell> = self.agents.iter().filter_map(|a| a.view.target).collect();
        self.mask
            .free_cells()
            .filter(|c| !taken.contains(c))
            .min_by_key(|c| (c.distance2(anchor), *c))
            .or(Some(anchor))
    }

    pub fn directive(&self, id: AgentId) -> Directive {
        let a = &self.agents[id.0 as usize].view;
        let complete = self.is_complete();
        let goal = if complete { None } else { a.goal };
        let goal_center = goal.map(|g| self.proj.cell_center(g));
        let here = a.last_fix.map(|f| GeoPoint::new(f.lat, f.lon));
        Directive {
            agent_id: id,
            goal,
            goal_center,
            target: if complete { None } else { a.target },
            bearing_deg: here.zip(goal_center).map(|(h, g)| self.proj.bearing(h, g)),
            within_goal_cell: goal.is_some() && a.fix_cell == goal,
            readings: self.log.len(),
            reading_target: self.config.reading_target,
            complete,
        }
    }

    fn locate(&self, id: AgentId, fix: &Fix) -> Result<Cell> {
        let p = check_fix(fix)?;
        self.proj.cell_of(p).map_err(|source| FieldError::OutOfField {
            source,
            directive: Some(Box::new(self.directive(id))),
        })
    }

    pub fn report_fix(&mut self, id: AgentId, fix: Fix, ts: u64) -> Result<Directive> {
        self.agent(id)?;
        let cell = self.locate(id, &fix)?;
        let a = &mut self.agents[id.0 as usize].view;
        a.last_fix = Some(fix);
        a.fix_cell = Some(cell);
        self.push(ts, EventKind::FixReported { agent_id: id, fix });
        Ok(self.directive(id))
    }

    /// Accepts a reading, re-krigs and reassigns every agent's goal.
    /// Repeating a token returns the original response unchanged.
    pub fn submit_reading(&mut self, id: AgentId, reading: FieldReading, token: String, ts: u64) -> Result<Directive> {
        self.agent(id)?;
        if let Some((owner, d)) = self.tokens.get(&token) {
            return if *owner == id {
                Ok(d.clone())
            } else {
                Err(FieldError::TokenConflict(token))
            };
        }
        if token.is_empty() {
            return Err(FieldError::Invalid("token must not be empty".into()));
        }
        if self.is_complete() {
            return Err(FieldError::Closed);
        }
        check_finite("vwc", reading.vwc)?;
        if !(0.0..=1.0).contains(&reading.vwc) {
            return Err(FieldError::Invalid(format!("vwc {} outside [0, 1]", reading.vwc)));
        }
        for (what, v) in [("ec", reading.ec), ("temp_c", reading.temp_c)] {
            if let Some(v) = v {
                check_finite(what, v)?;
            }
        }
        let cell = self.locate(id, &reading.fix())?;

        self.log.record(id, cell, reading.vwc)?;
        {
            let a = &mut self.agents[id.0 as usize].view;
            a.last_fix = Some(reading.fix());
            a.fix_cell = Some(cell);
            a.position = Some(cell);
            a.readings += 1;
        }
        self.push(
            ts,
            EventKind::ReadingAccepted {
                agent_id: id,
                reading,
                cell,
                token: token.clone(),
            },
        );
        self.recon = self.reconstructor.reconstruct(&self.log)?;
        if let Some(eval) = &self.evaluator {
            self.timeline.push(eval.evaluate(self.log.len(), &self.recon.estimate)?);
        }
        if !self.is_complete() {
            self.replan(ts)?;
        }
        let d = self.directive(id);
        self.tokens.insert(token, (id, d.clone()));
        Ok(d)
    }

    /// Agents that have read at least once, at their last reading cell.
    fn participants(&self) -> Vec<AgentState> {
        self.agents
            .iter()
            .filter_map(|a| {
                let pos = a.view.position?;
                let mut s = AgentState::new(a.view.agent_id, pos);
                s.goal = a.view.target;
                s.steps_taken = a.view.readings;
                Some(s)
            })
            .collect()
    }

    fn replan(&mut self, ts: u64) -> Result<()> {
        let states = self.participants();
        let mut plans: Vec<(AgentId, Cell, Cell)> = Vec::with_capacity(states.len());
        match self.config.strategy {
            FieldStrategy::Sbs => {
                let w = self.config.weights;
                let planner = ScorePlanner::new(&self.recon, &states, w, &self.mask)?;
                for s in &states {
                    let exclude: Vec<Cell> = states
                        .iter()
                        .zip(&plans)
                        .filter(|(o, _)| o.position == s.position)
                        .map(|(_, p)| p.2)
                        .collect();
                    let score = planner.score_for(s);
                    let target = select_goal_excluding(&score, s, &exclude)?;
                    let route = route_astar(s.position, target, &score.score, &w, &self.mask)?;
                    plans.push((s.id, route.get(1).copied().unwrap_or(s.position), target));
                }
            }
            FieldStrategy::Wandering => {
                for s in &states {
                    let target = match s.goal {
                        Some(t) if t != s.position => t,
                        _ => {
                            let free: Vec<Cell> = self.mask.free_cells().filter(|&c| c != s.position).collect();
                            if free.is_empty() {
                                s.position
                            } else {
                                free[self.rng.random_range(0..free.len())]
                            }
                        }
                    };
                    let route = route_shortest::<f64>(s.position, target, &self.mask)?;
                    plans.push((s.id, route.get(1).copied().unwrap_or(s.position), target));
                }
            }
        }
        for (id, cell, target) in plans {
            let a = &mut self.agents[id.0 as usize].view;
            if a.goal != Some(cell) || a.target != Some(target) {
                a.goal = Some(cell);
                a.target = Some(target);
                self.push(
                    ts,
                    EventKind::GoalAssigned {
                        agent_id: id,
                        cell,
                        target,
                    },
                );
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        let spec = self.mask.spec();
        Snapshot {
            session_id: self.id.clone(),
            config: self.config.clone(),
            rows: spec.rows(),
            cols: spec.cols(),
            readings: self.log.len(),
            reading_target: self.config.reading_target,
            complete: self.is_complete(),
            burn_in: self.recon.burn_in,
            estimate: self.recon.estimate.clone(),
            uncertainty: self.recon.uncertainty.clone(),
            model: self.recon.model,
            agents: self.agents.iter().map(|a| a.view.clone()).collect(),
            events: self.events.len() as u64,
            reading_events: self
                .events
                .iter()
                .filter(|e| matches!(e.kind, EventKind::ReadingAccepted { .. }))
                .count(),
            timeline: self.timeline().cloned(),
        }
    }

    pub fn truth(&self) -> Option<&GridMap<f64>> {
        self.truth.as_ref()
    }

    /// Rebuilds a session by re-running every recorded input. Derived
    /// events must come out identical. A log cut short yields the state at
    /// its last complete input.
    pub fn replay(events: &[Event]) -> Result<Self> {
        let corrupt = |m: String| FieldError::Corrupt(m);
        let Some(first) = events.first() else {
            return Err(corrupt("empty log".into()));
        };
        let EventKind::SessionCreated {
            session_id,
            config,
            truth,
        } = &first.kind
        else {
            return Err(corrupt("log does not start with SessionCreated".into()));
        };
        for (i, e) in events.iter().enumerate() {
            if e.seq != i as u64 + 1 {
                return Err(corrupt(format!("expected seq {}, found {}", i + 1, e.seq)));
            }
        }
        let mut s = Self::create(session_id.clone(), config.clone(), truth.clone(), first.ts)?;
        if s.events[0] != *first {
            return Err(corrupt("SessionCreated does not round-trip".into()));
        }
        let mut i = 1;
        while i < events.len() {
            let e = &events[i];
            let wrap = |err: FieldError| corrupt(format!("seq {}: {err}", e.seq));
            match &e.kind {
                EventKind::AgentJoined { placement, .. } => {
                    s.join(Some(*placement), e.ts).map_err(wrap)?;
                }
                EventKind::FixReported { agent_id, fix } => {
                    s.report_fix(*agent_id, *fix, e.ts).map_err(wrap)?;
                }
                EventKind::ReadingAccepted {
                    agent_id,
                    reading,
                    token,
                    ..
                } => {
                    s.submit_reading(*agent_id, reading.clone(), token.clone(), e.ts)
                        .map_err(wrap)?;
                }
                EventKind::GoalAssigned { .. } => {
                    return Err(corrupt(format!("seq {}: unexpected derived event", e.seq)));
                }
                EventKind::SessionCreated { .. } => {
                    return Err(corrupt(format!("seq {}: second SessionCreated", e.seq)));
                }
            }
            let produced = &s.events[i..];
            if produced.is_empty() {
                return Err(corrupt(format!("seq {}: input produced no event", e.seq)));
            }
            for (p, r) in produced.iter().zip(&events[i..]) {
                if p != r {
                    return Err(corrupt(format!(
                        "seq {}: replay produced {:?}, log has {:?}",
                        r.seq, p.kind, r.kind
                    )));
                }
            }
            i += produced.len();
        }
        // a log cut inside a burst of derived events
        s.events.truncate(events.len());
        Ok(s)
    }
}
