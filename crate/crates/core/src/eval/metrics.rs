//! Per-question recall metrics.

use crate::corpus::{AnswerKind, CorpusGraph};
use crate::error::{Error, Result};
use crate::text::normalize_answer_text;

/// 1-based rank of each gold title in `ranked`, aligned with `gold`.
pub fn gold_ranks<S: AsRef<str>>(ranked: &[S], gold: &[String]) -> Vec<Option<usize>> {
    gold.iter()
        .map(|g| ranked.iter().position(|t| t.as_ref() == g).map(|i| i + 1))
        .collect()
}

/// 1 iff every gold title is among the first `k` ranked titles.
pub fn recall_at_k<S: AsRef<str>>(ranked: &[S], gold: &[String], k: usize) -> Result<u8> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("gold title set is empty".into()));
    }
    let top = &ranked[..k.min(ranked.len())];
    Ok(u8::from(gold.iter().all(|g| top.iter().any(|t| t.as_ref() == g))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerOutcome {
    /// Non-span answer; excluded from answer recall.
    Skipped,
    NotFound,
    /// 1-based rank of the first document containing the answer.
    Found(usize),
}

impl AnswerOutcome {
    pub fn within(self, k: usize) -> Option<u8> {
        match self {
            AnswerOutcome::Skipped => None,
            AnswerOutcome::NotFound => Some(0),
            AnswerOutcome::Found(r) => Some(u8::from(r <= k)),
        }
    }
}

/// Finds the first document whose normalized title and text contain the
/// normalized answer.
pub fn answer_rank<S: AsRef<str>>(
    ranked: &[S],
    answer: &str,
    kind: AnswerKind,
    graph: &CorpusGraph,
) -> Result<AnswerOutcome> {
    if kind != AnswerKind::Span {
        return Ok(AnswerOutcome::Skipped);
    }
    let needle = normalize_answer_text(answer);
    if needle.is_empty() {
        return Err(Error::InvalidArgument("span answer is empty".into()));
    }
    for (i, title) in ranked.iter().enumerate() {
        let doc = graph.require(title.as_ref())?;
        let hay = normalize_answer_text(&format!("{} {}", doc.title, doc.text));
        if hay.contains(&needle) {
            return Ok(AnswerOutcome::Found(i + 1));
        }
    }
    Ok(AnswerOutcome::NotFound)
}

/// `None` when the question is skipped (non-span answer), otherwise 1 iff
/// the answer occurs in one of the first `k` documents.
pub fn answer_recall_at_k<S: AsRef<str>>(
    ranked: &[S],
    answer: &str,
    kind: AnswerKind,
    k: usize,
    graph: &CorpusGraph,
) -> Result<Option<u8>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let top = &ranked[..k.min(ranked.len())];
    Ok(answer_rank(top, answer, kind, graph)?.within(k))
}
