//! Request/response logs of simulated operators, and re-submission of a
//! recorded session to a fresh one.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sbs_core::AgentId;
use sbs_server::api::{DirectiveResponse, ErrorBody, JoinRequest, JoinResponse, ReadingRequest};
use sbs_server::Fix;

use crate::api::{ApiError, SwarmApi};
use crate::error::{OperatorError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "snake_case")]
pub enum Request {
    Join(JoinRequest),
    Fix(Fix),
    Reading(ReadingRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "snake_case")]
pub enum Response {
    Joined(JoinResponse),
    Directive(DirectiveResponse),
    Rejected { status: u16, error: ErrorBody },
    Transport(String),
}

impl Response {
    pub fn from_error(e: &ApiError) -> Self {
        match e {
            ApiError::Rejected { status, body } => Self::Rejected {
                status: *status,
                error: body.clone(),
            },
            ApiError::Transport(m) => Self::Transport(m.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub operator: u32,
    /// Seconds since the run started (simulated or wall clock).
    pub t: f64,
    pub request: Request,
    pub response: Response,
}

/// Writes `operator_NN.jsonl` per operator into `dir`.
pub fn write_transcripts<'a>(
    dir: impl AsRef<Path>,
    transcripts: impl IntoIterator<Item = &'a [TranscriptEntry]>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| OperatorError::io(dir, e))?;
    let mut out = Vec::new();
    for (i, entries) in transcripts.into_iter().enumerate() {
        let path = dir.join(format!("operator_{i:02}.jsonl"));
        let mut f = fs::File::create(&path).map_err(|e| OperatorError::io(&path, e))?;
        for e in entries {
            let line = serde_json::to_string(e).expect("entries serialise");
            writeln!(f, "{line}").map_err(|e| OperatorError::io(&path, e))?;
        }
        out.push(path);
    }
    Ok(out)
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| OperatorError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| OperatorError::Transcript(format!("{}: {e}", path.display()))))
        .collect()
}

/// Re-submits the accepted joins and readings of a recorded session to
/// session `sid` in their original server order: joins by agent id,
/// readings by the reading count the server reported back. Fixes are not
/// re-sent since they do not affect maps or goals.
pub async fn resubmit<A: SwarmApi>(api: &A, sid: &str, entries: &[TranscriptEntry]) -> Result<()> {
    let mut joins: BTreeMap<AgentId, (u32, &JoinRequest)> = BTreeMap::new();
    let mut readings: BTreeMap<usize, (u32, &ReadingRequest)> = BTreeMap::new();
    for e in entries {
        match (&e.request, &e.response) {
            (Request::Join(req), Response::Joined(r)) => {
                joins.insert(r.agent_id, (e.operator, req));
            }
            (Request::Reading(req), Response::Directive(r)) => {
                let prev = readings.insert(r.directive.readings, (e.operator, req));
                if prev.is_some_and(|p| p.1.token != req.token) {
                    return Err(OperatorError::Transcript(format!(
                        "two readings claim position {}",
                        r.directive.readings
                    )));
                }
            }
            _ => {}
        }
    }
    let mut agent_of = BTreeMap::new();
    for (want, (op, req)) in joins {
        let got = api.join(sid, req).await?.agent_id;
        if got != want {
            return Err(OperatorError::Transcript(format!("join produced agent {got}, recorded {want}")));
        }
        agent_of.insert(op, got);
    }
    for (k, (op, req)) in readings {
        let agent = *agent_of
            .get(&op)
            .ok_or_else(|| OperatorError::Transcript(format!("operator {op} reads without joining")))?;
        let d = api.reading(sid, agent, req).await?.directive;
        if d.readings != k {
            return Err(OperatorError::Transcript(format!("reading {k} landed at position {}", d.readings)));
        }
    }
    Ok(())
}
