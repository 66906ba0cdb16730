use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use sbs_core::GridMap;
use sbs_harness::maps::{read_map, write_json};
use sbs_operator::{run_concurrent, write_transcripts, Compliance, FleetConfig, HttpApi, SwarmApi, DEFAULT_GPS_SIGMA_M};
use sbs_server::api::CreateSessionRequest;
use sbs_server::store::read_log;
use sbs_server::{router, Coordinator, EventKind, GeoPoint, PlacementMode, Session, SessionConfig};

use crate::out_dir;

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "0.0.0.0")]
    host: String,
    /// Event logs go here, one `<session>.jsonl` per session.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Built operator UI; served at `/`.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Base of the join links handed out to operators.
    #[arg(long)]
    public_url: Option<String>,
}

pub fn serve(a: ServeArgs) -> Result<()> {
    if let Some(d) = &a.log_dir {
        out_dir(d)?;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.host, a.port))?;
        let addr = listener.local_addr()?;
        let mut coord = Coordinator::new(a.log_dir.clone());
        coord = coord.with_public_url(a.public_url.unwrap_or_else(|| format!("http://{addr}")));
        tracing::info!("listening on http://{addr}");
        axum::serve(listener, router(coord, a.ui_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Reference map for per-reading metrics; overrides one stored in the log.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

pub fn replay(a: ReplayArgs) -> Result<()> {
    let mut events = read_log(&a.log)?;
    if let Some(p) = &a.truth {
        let map = read_map(p)?;
        match events.first_mut().map(|e| &mut e.kind) {
            Some(EventKind::SessionCreated { truth, .. }) => *truth = Some(map),
            _ => bail!("{}: log does not start with a session", a.log.display()),
        }
    }
    let session = Session::replay(&events)?;
    out_dir(&a.out)?;
    let snap = session.snapshot();
    write_json(a.out.join("snapshot.json"), &snap)?;
    write_json(a.out.join("estimate.json"), &snap.estimate)?;
    write_json(a.out.join("uncertainty.json"), &snap.uncertainty)?;
    if let Some(t) = session.timeline() {
        let p = a.out.join("metrics.csv");
        fs::write(&p, t.to_csv()).with_context(|| format!("writing {}", p.display()))?;
        if let Some(last) = t.last() {
            println!("final sse {:.6} ca90 {:.4}", last.sse, last.ca[2]);
        }
    }
    println!(
        "replayed {} events: {} readings, {} agents, complete {}",
        events.len(),
        snap.readings,
        snap.agents.len(),
        snap.complete
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlacementArg {
    Center,
    Edges,
    UserChoice,
}

#[derive(Debug, Args)]
pub struct OperatorSimArgs {
    #[arg(long)]
    server: String,
    /// Existing session; without it a new session is created at `--origin`.
    #[arg(long)]
    session: Option<String>,
    #[arg(long, default_value_t = 4)]
    count: usize,
    /// What the operators' probes read.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GPS_SIGMA_M)]
    noise_sigma: f64,
    /// Operators stop anywhere within this many metres of the goal centre.
    #[arg(long)]
    sloppy_radius: Option<f64>,
    #[arg(long, value_enum)]
    placement: Option<PlacementArg>,
    /// Field corner `lat,lon` for a new session.
    #[arg(long, value_delimiter = ',', default_values_t = [40.7649, -111.8421])]
    origin: Vec<f64>,
    /// Wall-clock seconds per simulated second; 0 runs flat out.
    #[arg(long, default_value_t = 0.0)]
    time_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn operator_sim(a: OperatorSimArgs) -> Result<()> {
    let &[lat, lon] = a.origin.as_slice() else {
        bail!("--origin takes `lat,lon`");
    };
    let truth: GridMap<f64> = read_map(&a.truth)?;
    let api = HttpApi::new(&a.server)?;
    let mut fleet = FleetConfig {
        count: a.count,
        seed: a.seed,
        placement: a.placement.map(|p| match p {
            PlacementArg::Center => PlacementMode::Center,
            PlacementArg::Edges => PlacementMode::Edges,
            PlacementArg::UserChoice => PlacementMode::UserChoice,
        }),
        ..FleetConfig::default()
    };
    fleet.model.gps_noise_sigma_m = a.noise_sigma;
    if let Some(r) = a.sloppy_radius {
        fleet.model.compliance = Compliance::Sloppy { radius_m: r };
    }
    let rt = tokio::runtime::Runtime::new()?;
    let run = rt.block_on(async {
        let sid = match &a.session {
            Some(s) => s.clone(),
            None => {
                let mut config = SessionConfig::new(GeoPoint::new(lat, lon));
                config.seed = a.seed;
                let created = api
                    .create(&CreateSessionRequest {
                        config,
                        truth: Some(truth.clone()),
                    })
                    .await?;
                tracing::info!("created session {} ({})", created.session_id, created.join_url);
                created.session_id
            }
        };
        let run = run_concurrent(api.clone(), &sid, Arc::new(truth), &fleet, a.time_scale).await?;
        let snap = api.state(&sid).await?;
        anyhow::Ok((run, snap))
    })?;
    let (run, snap) = run;
    write_transcripts(&a.out, run.operators.iter().map(|o| o.transcript.as_slice()))?;
    write_json(a.out.join("run.json"), &run)?;
    for o in &run.operators {
        println!(
            "operator {} agent {:?}: {} readings, {} in commanded cell{}",
            o.index,
            o.agent_id.map(|a| a.0),
            o.readings,
            o.landed,
            o.aborted.as_deref().map(|w| format!(", aborted: {w}")).unwrap_or_default()
        );
    }
    let sse = snap.timeline.as_ref().and_then(|t| t.last()).map(|r| r.sse);
    println!(
        "session {}: {} readings, complete {}, final sse {}",
        run.session_id,
        snap.readings,
        snap.complete,
        sse.map_or("n/a".into(), |s| format!("{s:.6}"))
    );
    if run.timed_out {
        bail!("operators ran out of time before the session completed");
    }
    Ok(())
}
