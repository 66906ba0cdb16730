//! Runs a fleet of operators against one session.

use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sbs_core::GridMap;
use sbs_server::{PlacementMode, Projection};

use crate::api::SwarmApi;
use crate::error::{OperatorError, Result};
use crate::operator::{Operator, OperatorModel, OperatorRun, Tick};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FleetConfig {
    pub count: usize,
    /// Template for every operator; speed and seed are overridden per operator.
    pub model: OperatorModel,
    /// Walking speeds are drawn uniformly from this range.
    pub speed_range: [f64; 2],
    /// Placement requested at join; `None` leaves it to the session.
    pub placement: Option<PlacementMode>,
    pub seed: u64,
    /// Poll interval in simulated seconds.
    pub dt_s: f64,
    pub max_time_s: f64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            count: 4,
            model: OperatorModel::default(),
            speed_range: [0.9, 1.5],
            placement: None,
            seed: 0,
            dt_s: 1.0,
            max_time_s: 6.0 * 3600.0,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OperatorError::Config(m));
        if self.count == 0 {
            return bad("need at least one operator".into());
        }
        let [lo, hi] = self.speed_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad(format!("speed range [{lo}, {hi}] is not a positive interval"));
        }
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return bad(format!("dt {} must be positive", self.dt_s));
        }
        if !(self.max_time_s >= self.dt_s) {
            return bad(format!("max time {} is shorter than one tick", self.max_time_s));
        }
        self.model.validate().map_err(OperatorError::Config)
    }

    /// Per-operator models: heterogeneous speeds, independent seeds.
    pub fn models(&self) -> Vec<OperatorModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let [lo, hi] = self.speed_range;
        (0..self.count)
            .map(|_| {
                let speed_mps = if lo == hi { lo } else { rng.random_range(lo..hi) };
                OperatorModel {
                    speed_mps,
                    seed: rng.next_u64(),
                    ..self.model.clone()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetRun {
    pub session_id: String,
    /// Simulated seconds until the last operator stopped.
    pub elapsed_s: f64,
    pub timed_out: bool,
    pub operators: Vec<OperatorRun>,
}

impl FleetRun {
    pub fn readings(&self) -> usize {
        self.operators.iter().map(|o| o.readings).sum()
    }

    pub fn landed(&self) -> usize {
        self.operators.iter().map(|o| o.landed).sum()
    }
}

async fn build<A: SwarmApi>(api: &A, sid: &str, truth: Arc<GridMap<f64>>, fleet: &FleetConfig) -> Result<Vec<Operator>> {
    fleet.validate()?;
    let cfg = api.state(sid).await?.config;
    let (rows, cols) = cfg
        .dims()
        .map_err(|e| OperatorError::Config(e.to_string()))?;
    if truth.spec().rows() != rows || truth.spec().cols() != cols {
        return Err(OperatorError::Config(format!(
            "truth map is {}x{}, session is {rows}x{cols}",
            truth.spec().rows(),
            truth.spec().cols()
        )));
    }
    let proj = Projection::new(cfg.origin, cfg.cell_size_m, rows, cols);
    let start = (rows as f64 * cfg.cell_size_m / 2.0, cols as f64 * cfg.cell_size_m / 2.0);
    Ok(fleet
        .models()
        .into_iter()
        .enumerate()
        .map(|(i, m)| Operator::new(i as u32, m, fleet.placement, proj.clone(), truth.clone(), start))
        .collect())
}

/// Simulated clock: operators act in index order at each tick. Fully
/// deterministic for a given API, session and fleet.
pub async fn run_virtual<A: SwarmApi>(
    api: &A,
    sid: &str,
    truth: Arc<GridMap<f64>>,
    fleet: &FleetConfig,
) -> Result<FleetRun> {
    let mut ops = build(api, sid, truth, fleet).await?;
    let mut t = 0.0;
    let mut step = 0u64;
    while ops.iter().any(|o| !o.is_done()) && t <= fleet.max_time_s {
        for op in ops.iter_mut() {
            op.tick(api, sid, t, fleet.dt_s).await;
        }
        step += 1;
        t = step as f64 * fleet.dt_s;
    }
    let timed_out = ops.iter().any(|o| !o.is_done());
    Ok(FleetRun {
        session_id: sid.to_string(),
        elapsed_s: t,
        timed_out,
        operators: ops.into_iter().map(Operator::into_run).collect(),
    })
}

/// One task per operator, each sleeping `dt_s * time_scale` real seconds
/// between polls. Interleaving depends on the scheduler.
pub async fn run_concurrent<A: SwarmApi + Clone + 'static>(
    api: A,
    sid: &str,
    truth: Arc<GridMap<f64>>,
    fleet: &FleetConfig,
    time_scale: f64,
) -> Result<FleetRun> {
    let ops = build(&api, sid, truth, fleet).await?;
    let pause = Duration::from_secs_f64((fleet.dt_s * time_scale).max(0.0));
    let mut tasks = Vec::with_capacity(ops.len());
    for mut op in ops {
        let api = api.clone();
        let sid = sid.to_string();
        let (dt, max_t) = (fleet.dt_s, fleet.max_time_s);
        tasks.push(tokio::spawn(async move {
            let mut step = 0u64;
            let mut t = 0.0;
            while t <= max_t {
                if op.tick(&api, &sid, t, dt).await == Tick::Done {
                    break;
                }
                step += 1;
                t = step as f64 * dt;
                if pause.is_zero() {
                    tokio::task::yield_now().await;
                } else {
                    tokio::time::sleep(pause).await;
                }
            }
            (t, op)
        }));
    }
    let mut operators = Vec::with_capacity(tasks.len());
    let mut elapsed_s: f64 = 0.0;
    let mut timed_out = false;
    for task in tasks {
        let (t, op) = task
            .await
            .map_err(|e| OperatorError::Config(format!("operator task failed: {e}")))?;
        elapsed_s = elapsed_s.max(t);
        timed_out |= !op.is_done();
        operators.push(op.into_run());
    }
    Ok(FleetRun {
        session_id: sid.to_string(),
        elapsed_s,
        timed_out,
        operators,
    })
}
