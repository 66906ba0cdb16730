//! The coordinator API as seen by an operator: over HTTP, or in-process.

use std::future::Future;
use std::time::Duration;

use sbs_core::AgentId;
use sbs_server::api::{
    error_response, CreateSessionRequest, CreateSessionResponse, DirectiveResponse, ErrorBody, JoinRequest,
    JoinResponse, ReadingRequest,
};
use sbs_server::{Coordinator, FieldError, Fix, Snapshot};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApiError {
    /// Network-level failure; worth retrying.
    #[error("transport: {0}")]
    Transport(String),
    #[error("server rejected request ({status}): {}", body.error)]
    Rejected { status: u16, body: ErrorBody },
}

impl ApiError {
    pub fn code(&self) -> Option<&str> {
        match self {
            Self::Rejected { body, .. } => Some(&body.code),
            Self::Transport(_) => None,
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

pub trait SwarmApi: Send + Sync {
    fn create(&self, req: &CreateSessionRequest) -> impl Future<Output = ApiResult<CreateSessionResponse>> + Send;
    fn join(&self, sid: &str, req: &JoinRequest) -> impl Future<Output = ApiResult<JoinResponse>> + Send;
    fn fix(&self, sid: &str, agent: AgentId, fix: &Fix) -> impl Future<Output = ApiResult<DirectiveResponse>> + Send;
    fn reading(
        &self,
        sid: &str,
        agent: AgentId,
        req: &ReadingRequest,
    ) -> impl Future<Output = ApiResult<DirectiveResponse>> + Send;
    fn state(&self, sid: &str) -> impl Future<Output = ApiResult<Snapshot>> + Send;
}

/// Talks to a running coordinator.
#[derive(Debug, Clone)]
pub struct HttpApi {
    base: String,
    client: reqwest::Client,
}

impl HttpApi {
    pub fn new(base: impl Into<String>) -> ApiResult<Self> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| ApiError::Transport(e.to_string()))?;
        Ok(Self {
            base: base.into().trim_end_matches('/').to_string(),
            client,
        })
    }

    async fn send<T: DeserializeOwned>(&self, rb: reqwest::RequestBuilder) -> ApiResult<T> {
        let resp = rb.send().await.map_err(|e| ApiError::Transport(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(|e| ApiError::Transport(e.to_string()))?;
        if status.is_success() {
            serde_json::from_slice(&bytes).map_err(|e| ApiError::Transport(format!("bad response body: {e}")))
        } else {
            let body = serde_json::from_slice(&bytes).unwrap_or_else(|_| ErrorBody {
                error: String::from_utf8_lossy(&bytes).into_owned(),
                code: "http".into(),
                directive: None,
            });
            Err(ApiError::Rejected {
                status: status.as_u16(),
                body,
            })
        }
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> ApiResult<T> {
        self.send(self.client.post(format!("{}{path}", self.base)).json(body)).await
    }
}

impl SwarmApi for HttpApi {
    async fn create(&self, req: &CreateSessionRequest) -> ApiResult<CreateSessionResponse> {
        self.post("/api/sessions", req).await
    }

    async fn join(&self, sid: &str, req: &JoinRequest) -> ApiResult<JoinResponse> {
        self.post(&format!("/api/sessions/{sid}/agents"), req).await
    }

    async fn fix(&self, sid: &str, agent: AgentId, fix: &Fix) -> ApiResult<DirectiveResponse> {
        self.post(&format!("/api/sessions/{sid}/agents/{agent}/fix"), fix).await
    }

    async fn reading(&self, sid: &str, agent: AgentId, req: &ReadingRequest) -> ApiResult<DirectiveResponse> {
        self.post(&format!("/api/sessions/{sid}/agents/{agent}/reading"), req).await
    }

    async fn state(&self, sid: &str) -> ApiResult<Snapshot> {
        self.send(self.client.get(format!("{}/api/sessions/{sid}/state", self.base)))
            .await
    }
}

/// Calls the coordinator directly, without HTTP.
#[derive(Debug, Clone, Default)]
pub struct LocalApi {
    pub coordinator: Coordinator,
}

impl LocalApi {
    pub fn new(coordinator: Coordinator) -> Self {
        Self { coordinator }
    }
}

fn rejected(e: FieldError) -> ApiError {
    let (status, body) = error_response(&e);
    ApiError::Rejected {
        status: status.as_u16(),
        body,
    }
}

impl SwarmApi for LocalApi {
    async fn create(&self, req: &CreateSessionRequest) -> ApiResult<CreateSessionResponse> {
        self.coordinator.create_session(req.clone()).await.map_err(rejected)
    }

    async fn join(&self, sid: &str, req: &JoinRequest) -> ApiResult<JoinResponse> {
        self.coordinator.join(sid, req.clone()).await.map_err(rejected)
    }

    async fn fix(&self, sid: &str, agent: AgentId, fix: &Fix) -> ApiResult<DirectiveResponse> {
        self.coordinator.report_fix(sid, agent, *fix).await.map_err(rejected)
    }

    async fn reading(&self, sid: &str, agent: AgentId, req: &ReadingRequest) -> ApiResult<DirectiveResponse> {
        self.coordinator.submit_reading(sid, agent, req.clone()).await.map_err(rejected)
    }

    async fn state(&self, sid: &str) -> ApiResult<Snapshot> {
        self.coordinator.state(sid).await.map_err(rejected)
    }
}
