use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use sbs_core::envgen::{apply_scurve, ObstacleLayout, SCurveParams, DEFAULT_HURST};
use sbs_core::planner::ScoreWeights;
use sbs_core::strategies::{Placement, StrategyConfig, StrategyKind};
use sbs_harness::maps::write_maps;
use sbs_harness::output::{read_aggregate, write_comparison, write_plan_result, write_sweep_result, AGGREGATE_CSV};
use sbs_harness::{compare, compare_pooled, run_plan, run_sweep, ExperimentPlan, MapSource, SweepSpec};

use crate::out_dir;

#[derive(Debug, Args)]
pub struct GenMapsArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 50)]
    rows: usize,
    #[arg(long, default_value_t = 50)]
    cols: usize,
    #[arg(long, default_value_t = DEFAULT_HURST)]
    hurst: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attenuate with an S-curve, `threshold,power`.
    #[arg(long, value_delimiter = ',')]
    scurve: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

pub fn gen_maps(a: GenMapsArgs) -> Result<()> {
    let src = MapSource::Generate {
        count: a.count,
        rows: a.rows,
        cols: a.cols,
        hurst: a.hurst,
        seed: a.seed,
    };
    let mut maps = src.load()?;
    if let Some(tk) = &a.scurve {
        let &[t, k] = tk.as_slice() else {
            bail!("--scurve takes `threshold,power`");
        };
        let p = SCurveParams::new(t, k)?;
        maps = maps.iter().map(|m| apply_scurve(m, &p)).collect::<Result<_, _>>()?;
    }
    let paths = write_maps(&a.out, &maps)?;
    tracing::info!("wrote {} maps to {}", paths.len(), a.out.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlacementArg {
    Center,
    Edges,
    Random,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory of gridmap JSON files.
    #[arg(long)]
    maps: PathBuf,
    #[arg(long, default_value = "sbs")]
    strategy: StrategyKind,
    /// One or more agent counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    agents: Vec<usize>,
    #[arg(long, default_value_t = 800)]
    budget: usize,
    /// `key=value` weight overrides.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value = "none")]
    obstacles: ObstacleLayout,
    #[arg(long, value_enum, default_value = "center")]
    placement: PlacementArg,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
    milestones: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Also write per-episode metric timelines.
    #[arg(long)]
    timelines: bool,
    #[arg(long)]
    out: PathBuf,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let overrides = a
        .weights
        .as_ref()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let placement = match a.placement {
        PlacementArg::Center => Placement::Center,
        PlacementArg::Edges => Placement::Edges,
        PlacementArg::Random => Placement::Random,
    };
    let mut configs = Vec::new();
    for &n in &a.agents {
        let mut c = StrategyConfig::new(a.strategy, n)
            .with_budget(a.budget)
            .with_placement(placement.clone());
        if let Some(text) = &overrides {
            let w = ScoreWeights::parse_kv(c.weights, text)?;
            c = c.with_weights(w);
        }
        configs.push(c);
    }
    let mut plan = ExperimentPlan::new(MapSource::dir(&a.maps)?, configs);
    plan.obstacles = a.obstacles;
    plan.milestones = a.milestones;
    plan.master_seed = a.seed;
    plan.threads = a.threads;
    let result = run_plan(&plan)?;
    let failed = result.episodes.iter().filter(|e| e.outcome.is_err()).count();
    if failed > 0 {
        tracing::warn!("{failed} episodes failed; see episodes.csv");
    }
    write_plan_result(&a.out, &result, a.timelines)?;
    for r in &result.table {
        println!(
            "{:<14} milestone {:<5} round {:<4} sse {:.4} ca90 {:.4}",
            r.strategy, r.milestone, r.round, r.stats[0].mean, r.stats[3].mean
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep spec; fields left out take the `--scale` defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let mut spec = match a.scale {
        Scale::Desk => SweepSpec::desk(),
        Scale::Full => SweepSpec::full(),
    };
    if let Some(p) = &a.spec {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let mut base = serde_json::to_value(&spec)?;
        let over: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        let (Some(b), Some(o)) = (base.as_object_mut(), over.as_object()) else {
            bail!("{}: sweep spec must be a JSON object", p.display());
        };
        for (k, v) in o {
            b.insert(k.clone(), v.clone());
        }
        spec = serde_json::from_value(base)?;
    }
    if let Some(r) = a.replicates {
        spec.replicates = r;
    }
    if a.threads.is_some() {
        spec.threads = a.threads;
    }
    tracing::info!(
        "sweeping {} combinations x {} replicates on {}x{}, budget {}",
        spec.combinations(),
        spec.replicates,
        spec.rows,
        spec.cols,
        spec.budget
    );
    let result = run_sweep(&spec)?;
    write_sweep_result(&a.out, &result)?;
    if let Some(best) = result.best() {
        println!("best (sse {:.4}, ca90 {:.4}):", best.final_sse.mean, best.final_ca90.mean);
        print!("{}", best.weights.to_kv());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Simulate output directory of the challenger.
    #[arg(long)]
    a: PathBuf,
    /// Simulate output directory of the baseline.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 0.10)]
    margin: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Pool agent counts within each milestone before testing.
    #[arg(long)]
    pooled: bool,
    #[arg(long)]
    out: PathBuf,
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let ra = read_aggregate(a.a.join(AGGREGATE_CSV))?;
    let rb = read_aggregate(a.b.join(AGGREGATE_CSV))?;
    let rows = if a.pooled {
        compare_pooled(&ra, &rb, a.margin, a.alpha)?
    } else {
        compare(&ra, &rb, a.margin, a.alpha)?
    };
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(&parent.to_path_buf())?;
    }
    write_comparison(&a.out, &rows)?;
    for r in &rows {
        println!(
            "agents {:<3} milestone {:<5} {:<5} a {:.4} b {:.4} p_adj {:.3e} {}",
            r.agents,
            r.milestone,
            r.metric,
            r.a.mean,
            r.b.mean,
            r.p_adjusted,
            if r.reject { "reject" } else { "-" }
        );
    }
    Ok(())
}
