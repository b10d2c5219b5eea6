//! Language-model scoring backends.
//!
//! A backend computes `log P(continuation | context)` under a
//! temperature-scaled distribution and fills `<X>`/`<Y>` span templates for
//! instruction generation. The same request/response types are the JSON
//! bodies of the HTTP wire protocol.

mod http;
mod mock;
mod server;

use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, RetryPolicy};
pub use mock::{MockBackend, MOCK_FILLS};
pub use server::ReferenceServer;

use crate::error::ScorerError;

pub const FILL_X: &str = "<X>";
pub const FILL_Y: &str = "<Y>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub context: String,
    pub continuation: String,
    pub temperature: f64,
}

impl ScoreRequest {
    pub fn validate(&self) -> Result<(), ScorerError> {
        if self.continuation.trim().is_empty() {
            return Err(ScorerError::InvalidRequest("continuation is empty".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(ScorerError::InvalidRequest(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    /// Sum of continuation-token log-probabilities.
    pub logprob: f64,
    pub num_tokens: u32,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillRequest {
    pub template: String,
    pub num_samples: u32,
    pub top_k: u32,
}

impl FillRequest {
    pub fn validate(&self) -> Result<(), ScorerError> {
        for marker in [FILL_X, FILL_Y] {
            let n = self.template.matches(marker).count();
            if n != 1 {
                return Err(ScorerError::InvalidRequest(format!(
                    "template must contain {marker} exactly once, found {n}"
                )));
            }
        }
        if self.num_samples == 0 || self.top_k == 0 {
            return Err(ScorerError::InvalidRequest(
                "num_samples and top_k must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fill {
    pub x: String,
    pub y: String,
}

impl Fill {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
        }
    }

    fn has_marker(&self) -> bool {
        [&self.x, &self.y]
            .iter()
            .any(|s| s.contains(FILL_X) || s.contains(FILL_Y))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillResponse {
    pub fills: Vec<Fill>,
}

impl FillResponse {
    pub fn validate(&self, request: &FillRequest) -> Result<(), ScorerError> {
        if self.fills.len() > request.num_samples as usize {
            return Err(ScorerError::Schema(format!(
                "{} fills returned for num_samples={}",
                self.fills.len(),
                request.num_samples
            )));
        }
        if self.fills.iter().any(Fill::has_marker) {
            return Err(ScorerError::Schema("fill contains a placeholder marker".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub model: String,
    pub max_context_tokens: u32,
}

/// Behavioral contract shared by every scoring backend. Responses align
/// one-to-one, in order, with the requests of a batch.
pub trait ScorerBackend: Send + Sync {
    fn info(&self) -> BackendInfo;

    fn score(&self, batch: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError>;

    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ScorerError>;

    fn max_context_tokens(&self) -> usize {
        self.info().max_context_tokens as usize
    }
}

impl<B: ScorerBackend + ?Sized> ScorerBackend for std::sync::Arc<B> {
    fn info(&self) -> BackendInfo {
        (**self).info()
    }

    fn score(&self, batch: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        (**self).score(batch)
    }

    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ScorerError> {
        (**self).fill(request)
    }
}
