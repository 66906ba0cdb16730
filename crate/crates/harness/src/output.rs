//! CSV and JSON artifacts of a plan run or a sweep.

use std::fs;
use std::path::Path;

use sbs_core::stats::SampleStats;
use sbs_core::strategies::StrategyKind;

use crate::error::{io_err, HarnessError, Result};
use crate::maps::write_json;
use crate::plan::{metric_value, milestone_round, AggregateRow, PlanResult, METRICS};
use crate::compare::ComparisonRow;
use crate::sweep::SweepResult;

pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const EPISODES_CSV: &str = "episodes.csv";
pub const PLAN_JSON: &str = "plan.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";

fn aggregate_header() -> Vec<String> {
    let mut h: Vec<String> = ["strategy", "kind", "agents", "milestone", "round", "n"]
        .map(String::from)
        .into();
    for m in METRICS {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_sd"));
    }
    h
}

pub fn write_aggregate(path: impl AsRef<Path>, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(aggregate_header())?;
    for r in rows {
        let mut rec = vec![
            r.strategy.clone(),
            r.kind.to_string(),
            r.agents.to_string(),
            r.milestone.to_string(),
            r.round.to_string(),
            r.n().to_string(),
        ];
        for s in &r.stats {
            rec.push(s.mean.to_string());
            rec.push(s.sd.to_string());
        }
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))
}

pub fn read_aggregate(path: impl AsRef<Path>) -> Result<Vec<AggregateRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != aggregate_header() {
        return Err(HarnessError::Plan(format!("{}: unexpected header", path.display())));
    }
    let bad = |what: &str, v: &str| HarnessError::Plan(format!("{}: bad {what} `{v}`", path.display()));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&header[i], &rec[i]));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(&header[i], &rec[i]));
        let kind: StrategyKind = rec[1].parse().map_err(|_| bad("kind", &rec[1]))?;
        let n = int(5)?;
        let mut stats = [SampleStats { n, mean: 0.0, sd: 0.0 }; 6];
        for (k, s) in stats.iter_mut().enumerate() {
            s.mean = num(6 + 2 * k)?;
            s.sd = num(7 + 2 * k)?;
        }
        out.push(AggregateRow {
            strategy: rec[0].to_string(),
            kind,
            agents: int(2)?,
            milestone: num(3)?,
            round: int(4)?,
            stats,
        });
    }
    Ok(out)
}

/// One row per episode and milestone; failed episodes get one row with
/// the error and empty metrics.
pub fn write_episodes(path: impl AsRef<Path>, result: &PlanResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = vec!["strategy", "map_id", "seed", "milestone", "round"];
    header.extend(METRICS);
    header.push("error");
    w.write_record(&header)?;
    for e in &result.episodes {
        let entry = &result.plan.strategies[e.strategy];
        let head = [entry.label.clone(), e.map_id.to_string(), e.seed.to_string()];
        match &e.outcome {
            Ok(timeline) => {
                let steps = entry.config.steps_per_agent();
                for &f in &result.plan.milestones {
                    let round = milestone_round(f, steps);
                    let mut rec = head.to_vec();
                    rec.push(f.to_string());
                    rec.push(round.to_string());
                    match timeline.at(round) {
                        Some(row) => {
                            rec.extend((0..METRICS.len()).map(|k| metric_value(row, k).to_string()));
                            rec.push(String::new());
                        }
                        None => {
                            rec.extend(std::iter::repeat_n(String::new(), METRICS.len()));
                            rec.push(format!("no row for round {round}"));
                        }
                    }
                    w.write_record(rec)?;
                }
            }
            Err(msg) => {
                let mut rec = head.to_vec();
                rec.extend(std::iter::repeat_n(String::new(), 2 + METRICS.len()));
                rec.push(msg.clone());
                w.write_record(rec)?;
            }
        }
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))
}

/// Writes `plan.json`, `aggregate.csv`, `episodes.csv` and, if asked,
/// `timelines/<label>/map_NNNN.csv` under `dir`.
pub fn write_plan_result(dir: impl AsRef<Path>, result: &PlanResult, timelines: bool) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(dir.join(PLAN_JSON), &result.plan)?;
    write_aggregate(dir.join(AGGREGATE_CSV), &result.table)?;
    write_episodes(dir.join(EPISODES_CSV), result)?;
    if timelines {
        for e in &result.episodes {
            let Ok(t) = &e.outcome else { continue };
            let sub = dir.join("timelines").join(&result.plan.strategies[e.strategy].label);
            fs::create_dir_all(&sub).map_err(io_err(&sub))?;
            let p = sub.join(format!("map_{:04}.csv", e.map_id));
            fs::write(&p, t.to_csv()).map_err(io_err(&p))?;
        }
    }
    Ok(())
}

/// `sweep.csv` (ranked) and `sweep.json` under `dir`.
pub fn write_sweep_result(dir: impl AsRef<Path>, result: &SweepResult) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(dir.join(SWEEP_JSON), result)?;
    let mut w = csv::Writer::from_path(dir.join(SWEEP_CSV))?;
    let mut header = vec!["rank".to_string()];
    header.extend(sbs_core::planner::WEIGHT_KEYS.map(String::from));
    header.extend(
        ["n", "sse_mean", "sse_sd", "ca90_mean", "ca90_sd", "failures"].map(String::from),
    );
    w.write_record(&header)?;
    for r in &result.rows {
        let mut rec = vec![r.rank.to_string()];
        rec.extend(
            sbs_core::planner::WEIGHT_KEYS.map(|k| r.weights.get(k).unwrap_or(f64::NAN).to_string()),
        );
        rec.extend([
            r.final_sse.n.to_string(),
            r.final_sse.mean.to_string(),
            r.final_sse.sd.to_string(),
            r.final_ca90.mean.to_string(),
            r.final_ca90.sd.to_string(),
            r.failures.to_string(),
        ]);
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))
}

/// One row per (agents, milestone, metric) test.
pub fn write_comparison(path: impl AsRef<Path>, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "agents", "milestone", "metric", "n_a", "mean_a", "sd_a", "n_b", "mean_b", "sd_b", "p", "p_adjusted", "reject",
    ])?;
    for r in rows {
        w.write_record([
            r.agents.to_string(),
            r.milestone.to_string(),
            r.metric.clone(),
            r.a.n.to_string(),
            r.a.mean.to_string(),
            r.a.sd.to_string(),
            r.b.n.to_string(),
            r.b.mean.to_string(),
            r.b.sd.to_string(),
            r.p.to_string(),
            r.p_adjusted.to_string(),
            r.reject.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))
}
