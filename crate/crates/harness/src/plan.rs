use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sbs_core::envgen::{obstacle_layout, ObstacleLayout};
use sbs_core::metrics::{MetricEvaluator, MetricRow, MetricTimeline};
use sbs_core::stats::SampleStats;
use sbs_core::strategies::{run_episode_with, StrategyConfig, StrategyKind};
use sbs_core::GridMap;

use crate::error::{HarnessError, Result};
use crate::maps::MapSource;
use crate::seeds::episode_seed;

pub const DEFAULT_MILESTONES: [f64; 3] = [0.25, 0.5, 1.0];
pub const DEFAULT_REPLICATES: usize = 100;

/// Metric columns in table order.
pub const METRICS: [&str; 6] = ["sse", "ca50", "ca80", "ca90", "ca95", "ca99"];

pub fn metric_value(row: &MetricRow, metric: usize) -> f64 {
    if metric == 0 {
        row.sse
    } else {
        row.ca[metric - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub label: String,
    pub config: StrategyConfig,
}

impl StrategyEntry {
    /// Labelled `<kind>-n<agents>`.
    pub fn new(config: StrategyConfig) -> Self {
        Self {
            label: format!("{}-n{}", config.kind, config.num_agents),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub maps: MapSource,
    pub strategies: Vec<StrategyEntry>,
    #[serde(default = "default_milestones")]
    pub milestones: Vec<f64>,
    #[serde(default = "default_layout")]
    pub obstacles: ObstacleLayout,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_milestones() -> Vec<f64> {
    DEFAULT_MILESTONES.to_vec()
}

fn default_layout() -> ObstacleLayout {
    ObstacleLayout::None
}

impl ExperimentPlan {
    pub fn new(maps: MapSource, configs: impl IntoIterator<Item = StrategyConfig>) -> Self {
        Self {
            maps,
            strategies: configs.into_iter().map(StrategyEntry::new).collect(),
            milestones: default_milestones(),
            obstacles: ObstacleLayout::None,
            master_seed: 0,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Plan(m));
        if self.maps.is_empty() {
            return bad("no maps".into());
        }
        let Some(first) = self.strategies.first() else {
            return bad("no strategies".into());
        };
        let budget = first.config.total_step_budget;
        let mut labels = HashSet::new();
        for s in &self.strategies {
            if s.config.total_step_budget != budget {
                return bad(format!(
                    "strategy {} has budget {} but {} has {budget}",
                    s.label, s.config.total_step_budget, first.label
                ));
            }
            if !labels.insert(&s.label) {
                return bad(format!("duplicate label {}", s.label));
            }
            s.config.validate()?;
        }
        if self.milestones.is_empty() || self.milestones.iter().any(|&m| !(m > 0.0 && m <= 1.0)) {
            return bad(format!("milestones must lie in (0, 1]: {:?}", self.milestones));
        }
        Ok(())
    }
}

/// Round reached after fraction `f` of each agent's steps.
pub fn milestone_round(f: f64, steps_per_agent: usize) -> usize {
    ((f * steps_per_agent as f64) + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub map_id: usize,
    pub strategy: usize,
    pub seed: u64,
    pub outcome: std::result::Result<MetricTimeline, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: String,
    pub kind: StrategyKind,
    pub agents: usize,
    pub milestone: f64,
    pub round: usize,
    /// Per metric, in [`METRICS`] order.
    pub stats: [SampleStats; 6],
}

impl AggregateRow {
    pub fn n(&self) -> usize {
        self.stats[0].n
    }
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub plan: ExperimentPlan,
    pub episodes: Vec<EpisodeResult>,
    pub table: Vec<AggregateRow>,
}

impl PlanResult {
    /// Map ids consumed by strategy `s`, in order.
    pub fn map_sequence(&self, s: usize) -> Vec<usize> {
        self.episodes
            .iter()
            .filter(|e| e.strategy == s)
            .map(|e| e.map_id)
            .collect()
    }

    /// Per-map values of one metric at one milestone for one strategy,
    /// skipping failed episodes.
    pub fn values(&self, strategy: usize, milestone: f64, metric: usize) -> Vec<f64> {
        let steps = self.plan.strategies[strategy].config.steps_per_agent();
        let round = milestone_round(milestone, steps);
        self.episodes
            .iter()
            .filter(|e| e.strategy == strategy)
            .filter_map(|e| e.outcome.as_ref().ok())
            .filter_map(|t| t.at(round))
            .map(|r| metric_value(r, metric))
            .collect()
    }
}

fn run_one(
    truth: &GridMap<f64>,
    layout: ObstacleLayout,
    entry: &StrategyEntry,
    seed: u64,
) -> std::result::Result<MetricTimeline, String> {
    let mask = obstacle_layout(layout, *truth.spec()).map_err(|e| e.to_string())?;
    let config = entry.config.clone().with_seed(seed);
    let eval = MetricEvaluator::new(truth, &mask).map_err(|e| e.to_string())?;
    let mut timeline = MetricTimeline::default();
    let mut failure = None;
    let trace = run_episode_with(truth, &mask, &config, |round, recon| {
        match eval.evaluate(round, &recon.estimate) {
            Ok(row) => timeline.push(row),
            Err(e) => failure = failure.take().or(Some(e.to_string())),
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = failure {
        return Err(e);
    }
    let expect = config.num_agents * config.steps_per_agent();
    if trace.movement_samples() != expect {
        return Err(format!(
            "{} movement samples, expected {expect}",
            trace.movement_samples()
        ));
    }
    Ok(timeline)
}

/// Runs every strategy on every map, reusing the same map set for each
/// strategy, and aggregates the milestone rows.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanResult> {
    plan.validate()?;
    let maps = plan.maps.load()?;
    let jobs: Vec<(usize, usize)> = (0..plan.strategies.len())
        .flat_map(|s| (0..maps.len()).map(move |m| (m, s)))
        .collect();
    let work = || -> Vec<EpisodeResult> {
        jobs.par_iter()
            .map(|&(map_id, strategy)| {
                let seed = episode_seed(plan.master_seed, map_id, strategy);
                let entry = &plan.strategies[strategy];
                let outcome = run_one(&maps[map_id], plan.obstacles, entry, seed);
                if let Err(e) = &outcome {
                    tracing::warn!(map_id, strategy = %entry.label, "episode failed: {e}");
                }
                EpisodeResult {
                    map_id,
                    strategy,
                    seed,
                    outcome,
                }
            })
            .collect()
    };
    let episodes = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Plan(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut result = PlanResult {
        plan: plan.clone(),
        episodes,
        table: Vec::new(),
    };
    let expected: Vec<usize> = (0..maps.len()).collect();
    for s in 0..plan.strategies.len() {
        assert_eq!(result.map_sequence(s), expected, "map sequence differs across strategies");
    }
    result.table = aggregate(&result);
    Ok(result)
}

fn aggregate(result: &PlanResult) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for (s, entry) in result.plan.strategies.iter().enumerate() {
        let steps = entry.config.steps_per_agent();
        for &f in &result.plan.milestones {
            let stats = std::array::from_fn(|k| SampleStats::from_values(&result.values(s, f, k)));
            rows.push(AggregateRow {
                strategy: entry.label.clone(),
                kind: entry.config.kind,
                agents: entry.config.num_agents,
                milestone: f,
                round: milestone_round(f, steps),
                stats,
            });
        }
    }
    rows
}
