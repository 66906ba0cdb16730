//! One simulated operator: walks toward its directive in continuous metres,
//! polls with noisy GPS fixes and reads the truth map where it stands.

use std::future::Future;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sbs_core::{AgentId, Cell, GridMap};
use sbs_server::api::{JoinRequest, ReadingRequest};
use sbs_server::{Directive, FieldReading, Fix, PlacementMode, Projection};

use crate::api::{ApiError, SwarmApi};
use crate::transcript::{Request, Response, TranscriptEntry};

/// Default GPS noise: 2σ is about 5 m.
pub const DEFAULT_GPS_SIGMA_M: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compliance {
    /// Walks to the goal centre.
    Strict,
    /// Stops at a random point within `radius_m` of the goal centre.
    Sloppy { radius_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorModel {
    pub speed_mps: f64,
    pub gps_noise_sigma_m: f64,
    pub compliance: Compliance,
    pub seed: u64,
}

impl Default for OperatorModel {
    fn default() -> Self {
        Self {
            speed_mps: 1.2,
            gps_noise_sigma_m: DEFAULT_GPS_SIGMA_M,
            compliance: Compliance::Strict,
            seed: 0,
        }
    }
}

impl OperatorModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed_mps.is_finite() && self.speed_mps > 0.0) {
            return Err(format!("speed {} must be positive", self.speed_mps));
        }
        if !(self.gps_noise_sigma_m.is_finite() && self.gps_noise_sigma_m >= 0.0) {
            return Err(format!("GPS noise {} must be >= 0", self.gps_noise_sigma_m));
        }
        if let Compliance::Sloppy { radius_m } = self.compliance {
            if !(radius_m.is_finite() && radius_m >= 0.0) {
                return Err(format!("sloppy radius {radius_m} must be >= 0"));
            }
        }
        Ok(())
    }
}

/// What happened to one operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRun {
    pub index: u32,
    pub agent_id: Option<AgentId>,
    pub readings: usize,
    /// Readings whose true position lay in the commanded cell.
    pub landed: usize,
    pub aborted: Option<String>,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tick {
    Continue,
    Done,
}

const ARRIVED_M: f64 = 1e-9;
const MAX_RETRIES: usize = 3;

/// Retries transport failures a bounded number of times.
async fn retry<T, Fut: Future<Output = Result<T, ApiError>>>(mut f: impl FnMut() -> Fut) -> Result<T, ApiError> {
    let mut last = String::new();
    for attempt in 0..=MAX_RETRIES {
        match f().await {
            Err(ApiError::Transport(msg)) => {
                tracing::debug!(attempt, "transport error: {msg}");
                last = msg;
            }
            other => return other,
        }
    }
    Err(ApiError::Transport(last))
}

#[derive(Debug)]
pub struct Operator {
    pub index: u32,
    model: OperatorModel,
    placement: Option<PlacementMode>,
    proj: Projection,
    truth: std::sync::Arc<GridMap<f64>>,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    /// True position (north, east) in metres.
    pos: (f64, f64),
    agent: Option<AgentId>,
    directive: Option<Directive>,
    aim: Option<(Cell, (f64, f64))>,
    readings: usize,
    landed: usize,
    transcript: Vec<TranscriptEntry>,
    aborted: Option<String>,
    done: bool,
}

impl Operator {
    pub fn new(
        index: u32,
        model: OperatorModel,
        placement: Option<PlacementMode>,
        proj: Projection,
        truth: std::sync::Arc<GridMap<f64>>,
        start: (f64, f64),
    ) -> Self {
        let noise = (model.gps_noise_sigma_m > 0.0)
            .then(|| Normal::new(0.0, model.gps_noise_sigma_m).expect("validated sigma"));
        Self {
            index,
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
            placement,
            proj,
            truth,
            noise,
            pos: start,
            agent: None,
            directive: None,
            aim: None,
            readings: 0,
            landed: 0,
            transcript: Vec::new(),
            aborted: None,
            done: false,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn position(&self) -> (f64, f64) {
        self.pos
    }

    pub fn into_run(self) -> OperatorRun {
        OperatorRun {
            index: self.index,
            agent_id: self.agent,
            readings: self.readings,
            landed: self.landed,
            aborted: self.aborted,
            transcript: self.transcript,
        }
    }

    fn abort(&mut self, why: String) -> Tick {
        tracing::warn!(operator = self.index, "aborting: {why}");
        self.aborted = Some(why);
        self.done = true;
        Tick::Done
    }

    fn log(&mut self, t: f64, request: Request, response: Response) {
        self.transcript.push(TranscriptEntry {
            operator: self.index,
            t,
            request,
            response,
        });
    }

    fn noisy_fix(&mut self) -> Fix {
        let (mut n, mut e) = self.pos;
        if let Some(d) = self.noise {
            n += d.sample(&mut self.rng);
            e += d.sample(&mut self.rng);
        }
        let g = self.proj.to_geo(n, e);
        Fix {
            lat: g.lat,
            lon: g.lon,
            accuracy_m: 2.0 * self.model.gps_noise_sigma_m,
        }
    }

    fn true_cell(&self) -> Cell {
        self.proj
            .cell_of(self.proj.to_geo(self.pos.0, self.pos.1))
            .expect("operators stay inside the field")
    }

    fn aim_for(&mut self, goal: Cell) -> (f64, f64) {
        if let Some((c, p)) = self.aim {
            if c == goal {
                return p;
            }
        }
        let (cn, ce) = self.proj.cell_center_local(goal);
        let p = match self.model.compliance {
            Compliance::Strict => (cn, ce),
            Compliance::Sloppy { radius_m } => {
                let r = radius_m * self.rng.random::<f64>().sqrt();
                let th = self.rng.random::<f64>() * std::f64::consts::TAU;
                (cn + r * th.cos(), ce + r * th.sin())
            }
        };
        self.aim = Some((goal, p));
        p
    }

    fn walk(&mut self, to: (f64, f64), dt: f64) {
        let (dn, de) = (to.0 - self.pos.0, to.1 - self.pos.1);
        let d = dn.hypot(de);
        let step = self.model.speed_mps * dt;
        self.pos = if d <= step { to } else { (self.pos.0 + dn * step / d, self.pos.1 + de * step / d) };
    }

    fn record<T>(&mut self, t: f64, request: Request, r: &Result<T, ApiError>, wrap: impl Fn(&T) -> Response) {
        let response = match r {
            Ok(v) => wrap(v),
            Err(e) => Response::from_error(e),
        };
        self.log(t, request, response);
    }

    /// One poll interval of `dt` seconds at time `t`.
    pub async fn tick<A: SwarmApi>(&mut self, api: &A, sid: &str, t: f64, dt: f64) -> Tick {
        if self.done {
            return Tick::Done;
        }
        let Some(agent) = self.agent else {
            let req = JoinRequest {
                placement: self.placement,
            };
            let r = retry(|| api.join(sid, &req)).await;
            self.record(t, Request::Join(req.clone()), &r, |v| Response::Joined(v.clone()));
            return match r {
                Ok(j) => {
                    self.agent = Some(j.agent_id);
                    self.directive = Some(j.directive);
                    Tick::Continue
                }
                Err(e) if e.code() == Some("closed") => {
                    self.done = true;
                    Tick::Done
                }
                Err(e) => self.abort(format!("join failed: {e}")),
            };
        };
        if self.directive.as_ref().is_some_and(|d| d.complete) {
            self.done = true;
            return Tick::Done;
        }

        let goal = self.directive.as_ref().and_then(|d| d.goal);
        let aim = goal.map(|g| self.aim_for(g));
        if let Some(a) = aim {
            self.walk(a, dt);
        }
        let fix = self.noisy_fix();
        let r = retry(|| api.fix(sid, agent, &fix)).await;
        self.record(t, Request::Fix(fix), &r, |v| Response::Directive(v.clone()));
        let d = match r {
            Ok(r) => r.directive,
            Err(ApiError::Rejected { body, .. }) if body.code == "out_of_field" => {
                // keep walking on the last directive
                return Tick::Continue;
            }
            Err(e) => return self.abort(format!("fix failed: {e}")),
        };
        self.directive = Some(d.clone());
        if d.complete {
            self.done = true;
            return Tick::Done;
        }
        let at_aim = aim.is_some_and(|a| (a.0 - self.pos.0).hypot(a.1 - self.pos.1) <= ARRIVED_M);
        // with no goal yet, read where we stand
        let ready = match d.goal {
            None => true,
            Some(g) if Some(g) != goal => false,
            Some(_) => at_aim && d.within_goal_cell,
        };
        if !ready {
            if at_aim && !d.within_goal_cell {
                // GPS disagrees: head for the centre instead
                let g = d.goal.expect("at_aim implies a goal");
                self.aim = Some((g, self.proj.cell_center_local(g)));
            }
            return Tick::Continue;
        }

        let here = self.true_cell();
        let vwc = self.truth.get(here).clamp(0.0, 1.0);
        let req = ReadingRequest {
            reading: FieldReading {
                lat: fix.lat,
                lon: fix.lon,
                accuracy_m: fix.accuracy_m,
                vwc,
                ec: None,
                temp_c: None,
                client_ts: None,
            },
            token: format!("op{}-{}", self.index, self.readings),
        };
        let r = retry(|| api.reading(sid, agent, &req)).await;
        self.record(t, Request::Reading(req.clone()), &r, |v| Response::Directive(v.clone()));
        match r {
            Ok(r) => {
                self.readings += 1;
                if d.goal.is_none_or(|g| g == here) {
                    self.landed += 1;
                }
                self.aim = None;
                self.done = r.directive.complete;
                self.directive = Some(r.directive);
                if self.done {
                    Tick::Done
                } else {
                    Tick::Continue
                }
            }
            Err(e) if e.code() == Some("closed") => {
                self.done = true;
                Tick::Done
            }
            Err(ApiError::Rejected { body, .. }) if body.code == "out_of_field" => Tick::Continue,
            Err(e) => self.abort(format!("reading failed: {e}")),
        }
    }
}
