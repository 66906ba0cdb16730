use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sbs_core::envgen::{apply_scurve, generate_fbf, FbfParams, SCurveParams, DEFAULT_HURST};
use sbs_core::metrics::MetricEvaluator;
use sbs_core::planner::ScoreWeights;
use sbs_core::stats::SampleStats;
use sbs_core::strategies::{run_episode, StrategyConfig, StrategyKind};
use sbs_core::{GridMap, GridSpec, ObstacleMask};

use crate::error::{HarnessError, Result};
use crate::seeds::{episode_seed, map_seed, splitmix64};

pub const DEFAULT_GRID: [f64; 5] = [0.0, 0.1, 1.0, 10.0, 100.0];
pub const SCORE_WEIGHT_KEYS: [&str; 5] = [
    "weight_expected_value",
    "weight_uncertainty",
    "weight_prefer_center",
    "weight_prefer_closeness",
    "weight_prefer_current_goal",
];

/// Full-factorial weight sweep over S-curve-attenuated random fields,
/// single agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub grid: Vec<f64>,
    /// Weight keys varied over `grid`; the rest come from `base`.
    pub vary: Vec<String>,
    pub base: ScoreWeights,
    pub replicates: usize,
    pub rows: usize,
    pub cols: usize,
    pub budget: usize,
    pub hurst: f64,
    pub threshold_range: [f64; 2],
    pub curve_power_range: [f64; 2],
    pub master_seed: u64,
    pub threads: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self::desk()
    }
}

impl SweepSpec {
    /// 100×100 fields, 800 steps, 100 replicates.
    pub fn full() -> Self {
        Self {
            rows: 100,
            cols: 100,
            budget: 800,
            replicates: 100,
            ..Self::desk()
        }
    }

    /// 50×50 fields, 200 steps, 20 replicates.
    pub fn desk() -> Self {
        Self {
            grid: DEFAULT_GRID.to_vec(),
            vary: SCORE_WEIGHT_KEYS.iter().map(|s| s.to_string()).collect(),
            base: ScoreWeights::for_agents(1),
            replicates: 20,
            rows: 50,
            cols: 50,
            budget: 200,
            hurst: DEFAULT_HURST,
            threshold_range: [0.2, 0.8],
            curve_power_range: [0.5, 8.0],
            master_seed: 0,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Plan(m));
        if self.grid.is_empty() || self.grid.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return bad(format!("grid values must be finite and >= 0: {:?}", self.grid));
        }
        if self.replicates == 0 || self.budget == 0 {
            return bad("replicates and budget must be positive".into());
        }
        for key in &self.vary {
            if self.base.get(key).is_none() {
                return bad(format!("unknown weight key {key}"));
            }
        }
        let [t0, t1] = self.threshold_range;
        let [k0, k1] = self.curve_power_range;
        if !(t0 > 0.0 && t0 <= t1 && t1 < 1.0 && k0 > 0.0 && k0 <= k1 && k1.is_finite()) {
            return bad("S-curve parameter ranges out of domain".into());
        }
        Ok(())
    }

    pub fn combinations(&self) -> usize {
        self.grid.len().pow(self.vary.len() as u32)
    }

    /// Weight vector for combination `i` (last key varies fastest).
    pub fn weights_at(&self, mut i: usize) -> ScoreWeights {
        let mut w = self.base;
        for key in self.vary.iter().rev() {
            let v = self.grid[i % self.grid.len()];
            i /= self.grid.len();
            w.set(key, v).expect("keys validated");
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub scurve: SCurveParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rank: usize,
    pub weights: ScoreWeights,
    pub final_sse: SampleStats,
    pub final_ca90: SampleStats,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub objective: String,
    pub environments: Vec<Environment>,
    /// Best first.
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<ScoreWeights>,
}

impl SweepResult {
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.first()
    }
}

pub fn environments(spec: &SweepSpec) -> Result<Vec<(Environment, GridMap<f64>)>> {
    let grid = GridSpec::new(spec.rows, spec.cols, 1.0)?;
    (0..spec.replicates)
        .map(|r| {
            let seed = map_seed(spec.master_seed, r);
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
            let [t0, t1] = spec.threshold_range;
            let [k0, k1] = spec.curve_power_range;
            let t = if t0 == t1 { t0 } else { rng.random_range(t0..t1) };
            let k = if k0 == k1 { k0 } else { rng.random_range(k0..k1) };
            let scurve = SCurveParams::new(t, k)?;
            let raw = generate_fbf(&FbfParams::new(grid, seed).with_hurst(spec.hurst))?;
            Ok((Environment { seed, scurve }, apply_scurve(&raw, &scurve)?))
        })
        .collect()
}

/// Evaluates every weight combination on the same environments and ranks
/// them by mean final SSE, then by mean final CA90 (higher first).
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let envs = environments(spec)?;
    let mask = ObstacleMask::open(GridSpec::new(spec.rows, spec.cols, 1.0)?);
    let evals = envs
        .iter()
        .map(|(_, m)| MetricEvaluator::new(m, &mask))
        .collect::<sbs_core::Result<Vec<_>>>()?;

    let (combos, skipped): (Vec<_>, Vec<_>) = (0..spec.combinations())
        .map(|i| (i, spec.weights_at(i)))
        .partition(|(_, w)| w.validate().is_ok());
    let skipped: Vec<ScoreWeights> = skipped.into_iter().map(|(_, w)| w).collect();
    for w in &skipped {
        tracing::info!(?w, "skipping all-zero score weights");
    }

    let work = || -> Vec<SweepRow> {
        combos
            .par_iter()
            .map(|&(ci, weights)| {
                let mut sse = Vec::with_capacity(envs.len());
                let mut ca90 = Vec::with_capacity(envs.len());
                let mut failures = 0;
                for (r, (_, truth)) in envs.iter().enumerate() {
                    let config = StrategyConfig::new(StrategyKind::Sbs, 1)
                        .with_budget(spec.budget)
                        .with_weights(weights)
                        .with_seed(episode_seed(spec.master_seed, r, ci));
                    let row = run_episode(truth, &mask, &config)
                        .and_then(|t| evals[r].evaluate(spec.budget, &t.final_recon.estimate));
                    match row {
                        Ok(row) => {
                            sse.push(row.sse);
                            ca90.push(row.ca[2]);
                        }
                        Err(e) => {
                            tracing::warn!(?weights, replicate = r, "episode failed: {e}");
                            failures += 1;
                        }
                    }
                }
                SweepRow {
                    rank: 0,
                    weights,
                    final_sse: SampleStats::from_values(&sse),
                    final_ca90: SampleStats::from_values(&ca90),
                    failures,
                }
            })
            .collect()
    };
    let mut rows = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Plan(e.to_string()))?
            .install(work),
        None => work(),
    };
    // stable sort keeps enumeration order among exact ties
    rows.sort_by(|a, b| {
        let key = |r: &SweepRow| if r.final_sse.n == 0 { f64::INFINITY } else { r.final_sse.mean };
        key(a)
            .total_cmp(&key(b))
            .then(b.final_ca90.mean.total_cmp(&a.final_ca90.mean))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(SweepResult {
        objective: "mean final SSE ascending, then mean final CA90 descending".into(),
        environments: envs.into_iter().map(|(e, _)| e).collect(),
        rows,
        skipped,
    })
}
