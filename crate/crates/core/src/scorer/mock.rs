//! Deterministic in-process surrogate for a language model.
//!
//! Scores the continuation with an add-one smoothed unigram model of the
//! context: for context tokens `C` and vocabulary size `V = |distinct(C ∪ q)|`,
//! each continuation token `t` contributes `ln((count_C(t) + 1) / (|C| + V))`.
//! Temperature divides the summed log-probability by `T`; unlike softmax
//! temperature on real logits this never changes the relative order of two
//! continuations.

use std::collections::{HashMap, HashSet};

use super::{BackendInfo, Fill, FillRequest, FillResponse, ScoreRequest, ScoreResponse, ScorerBackend};
use crate::error::ScorerError;
use crate::text::word_tokens;

/// Fills returned by [`MockBackend::fill`], cycled to the requested count.
pub const MOCK_FILLS: &[(&str, &str)] = &[
    ("Read the following", "answer the"),
    ("Review the", "ask a"),
    ("Read the", "write the following"),
    ("Analyze the", "generate a"),
    ("Search the", "answer this"),
    ("Summarize the", "write a"),
];

#[derive(Debug, Clone)]
pub struct MockBackend {
    max_context_tokens: u32,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self {
            max_context_tokens: 1024,
        }
    }
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn score_one(&self, request: &ScoreRequest) -> Result<ScoreResponse, ScorerError> {
        request.validate()?;
        let context = word_tokens(&request.context);
        let continuation = word_tokens(&request.continuation);
        if continuation.is_empty() {
            return Err(ScorerError::InvalidRequest(
                "continuation has no word tokens".into(),
            ));
        }
        let mut counts: HashMap<&str, u32> = HashMap::new();
        for t in &context {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        let vocab: HashSet<&str> = context
            .iter()
            .chain(continuation.iter())
            .map(String::as_str)
            .collect();
        let denom = (context.len() + vocab.len()) as f64;
        let sum: f64 = continuation
            .iter()
            .map(|t| ((f64::from(counts.get(t.as_str()).copied().unwrap_or(0)) + 1.0) / denom).ln())
            .sum();
        Ok(ScoreResponse {
            logprob: sum / request.temperature,
            num_tokens: continuation.len() as u32,
            truncated: false,
        })
    }
}

impl ScorerBackend for MockBackend {
    fn info(&self) -> BackendInfo {
        BackendInfo {
            model: "mock-unigram".into(),
            max_context_tokens: self.max_context_tokens,
        }
    }

    fn score(&self, batch: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        batch.iter().map(|r| self.score_one(r)).collect()
    }

    fn fill(&self, request: &FillRequest) -> Result<FillResponse, ScorerError> {
        request.validate()?;
        let fills = MOCK_FILLS
            .iter()
            .cycle()
            .take(request.num_samples as usize)
            .map(|&(x, y)| Fill::new(x, y))
            .collect();
        Ok(FillResponse { fills })
    }
}
