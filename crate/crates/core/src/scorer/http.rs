//! Blocking client for the JSON-over-HTTP scoring protocol.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{BackendInfo, FillRequest, FillResponse, ScoreRequest, ScoreResponse, ScorerBackend};
use crate::error::ScorerError;

/// Retries apply to transport failures and 5xx responses. Delay before
/// retry `i` (0-based) is `base_backoff * 2^i`.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Serialize)]
struct ScoreBody<'a> {
    requests: &'a [ScoreRequest],
}

#[derive(Deserialize)]
struct ScoreReply {
    responses: Vec<ScoreResponse>,
}

#[derive(Deserialize)]
struct ErrorReply {
    error: String,
}

pub struct HttpBackend {
    base: String,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    info: BackendInfo,
    next_batch: AtomicU64,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("base", &self.base)
            .field("info", &self.info)
            .finish()
    }
}

enum Attempt<T> {
    Done(T),
    Retry(ScorerError),
    Fatal(ScorerError),
}

impl HttpBackend {
    /// Normalizes `endpoint` (adds `http://` when no scheme is given) and
    /// fetches `/v1/info`, so an unreachable service fails here.
    pub fn connect(endpoint: &str, retry: RetryPolicy) -> Result<Self, ScorerError> {
        let trimmed = endpoint.trim().trim_end_matches('/');
        let base = if trimmed.contains("://") {
            trimmed.to_string()
        } else {
            format!("http://{trimmed}")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| ScorerError::Connection {
                endpoint: base.clone(),
                message: e.to_string(),
            })?;
        let mut backend = Self {
            base,
            client,
            retry,
            info: BackendInfo {
                model: String::new(),
                max_context_tokens: 0,
            },
            next_batch: AtomicU64::new(0),
        };
        let info: BackendInfo = backend.call("GET", "/v1/info", None::<&()>)?;
        if info.max_context_tokens == 0 {
            return Err(ScorerError::Schema("max_context_tokens must be positive".into()));
        }
        backend.info = info;
        Ok(backend)
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    fn call<B: Serialize + ?Sized, T: DeserializeOwned>(
        &self,
        method: &str,
        path: &str,
        body: Option<&B>,
    ) -> Result<T, ScorerError> {
        let url = format!("{}{}", self.base, path);
        let batch_id = self.next_batch.fetch_add(1, Ordering::Relaxed);
        let mut last = None;
        for attempt in 0..=self.retry.max_retries {
            if attempt > 0 {
                let delay = self.retry.base_backoff * 2u32.pow(attempt - 1);
                log::debug!("retrying {url} (batch {batch_id}) in {delay:?}");
                std::thread::sleep(delay);
            }
            match self.attempt(method, &url, batch_id, body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn attempt<B: Serialize + ?Sized, T: DeserializeOwned>(
        &self,
        method: &str,
        url: &str,
        batch_id: u64,
        body: Option<&B>,
    ) -> Attempt<T> {
        let builder = match method {
            "GET" => self.client.get(url),
            _ => self.client.post(url),
        }
        .header("x-batch-id", batch_id.to_string());
        let builder = match body {
            Some(b) => builder.json(b),
            None => builder,
        };
        let resp = match builder.send() {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(ScorerError::Connection {
                    endpoint: self.base.clone(),
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Retry(ScorerError::Connection {
                    endpoint: self.base.clone(),
                    message: e.to_string(),
                })
            }
        };
        if !status.is_success() {
            let message = serde_json::from_str::<ErrorReply>(&text)
                .map(|r| r.error)
                .unwrap_or(text);
            let err = ScorerError::Status {
                endpoint: self.base.clone(),
                status: status.as_u16(),
                message,
            };
            return if status.is_server_error() {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        match serde_json::from_str(&text) {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fatal(ScorerError::Schema(e.to_string())),
        }
    }
}

impl ScorerBackend for HttpBackend {
    fn info(&self) -> BackendInfo {
        self.info.clone()
    }

    fn score(&self, batch: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        for r in batch {
            r.validate()?;
        }
        let reply: ScoreReply = self.call("POST", "/v1/score", Some(&ScoreBody { requests: batch }))?;
        if reply.responses.len() != batch.len() {
            return Err(ScorerError::CountMismatch {
                expected: batch.len(),
                got: reply.responses.len(),
            });
        }
        for r in &reply.responses {
            if !r.logprob.is_finite() || r.num_tokens == 0 {
                return Err(ScorerError::Schema(format!(
                    "invalid score response {r:?}"
                )));
            }
        }
        Ok(reply.responses)
    }

    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ScorerError> {
        request.validate()?;
        let reply: FillResponse = self.call("POST", "/v1/fill", Some(request))?;
        reply.validate(request)?;
        Ok(reply)
    }
}
