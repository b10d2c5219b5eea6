//! Okapi BM25 over unigram tokens.
//!
//! `score(q, d) = Σ_{t ∈ distinct(q)} idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·|d|/avgdl))`
//! with the non-negative idf `ln(1 + (N − df + 0.5)/(df + 0.5))`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusGraph;
use crate::error::{Error, Result};
use crate::sparse::rank_desc_by_title;
use crate::text::word_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    params: Bm25Params,
    doc_freq: BTreeMap<String, u32>,
    titles: Vec<String>,
    term_counts: Vec<BTreeMap<String, u32>>,
    doc_lens: Vec<u32>,
    avg_doc_len: f64,
    #[serde(skip)]
    doc_ids: HashMap<String, usize>,
}

impl Bm25Index {
    pub fn build(graph: &CorpusGraph, params: Bm25Params) -> Result<Self> {
        if graph.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if !(params.k1 >= 0.0) || !(0.0..=1.0).contains(&params.b) {
            return Err(Error::InvalidArgument(format!(
                "BM25 requires k1 >= 0 and 0 <= b <= 1, got k1={} b={}",
                params.k1, params.b
            )));
        }
        let mut doc_freq = BTreeMap::new();
        let mut term_counts = Vec::with_capacity(graph.doc_count());
        let mut doc_lens = Vec::with_capacity(graph.doc_count());
        for doc in graph.documents() {
            let tokens = word_tokens(&doc.text);
            doc_lens.push(tokens.len() as u32);
            let mut counts = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0u32) += 1;
            }
            for t in counts.keys() {
                *doc_freq.entry(t.clone()).or_insert(0u32) += 1;
            }
            term_counts.push(counts);
        }
        let total: u64 = doc_lens.iter().map(|&l| u64::from(l)).sum();
        // all-empty corpora would otherwise divide by zero
        let avg_doc_len = (total as f64 / doc_lens.len() as f64).max(1.0);
        let mut index = Self {
            params,
            doc_freq,
            titles: graph.documents().iter().map(|d| d.title.clone()).collect(),
            term_counts,
            doc_lens,
            avg_doc_len,
            doc_ids: HashMap::new(),
        };
        index.rebuild_lookup();
        Ok(index)
    }

    pub(crate) fn rebuild_lookup(&mut self) {
        self.doc_ids = self
            .titles
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.titles.len() as f64;
        let df = f64::from(self.doc_freq.get(term).copied().unwrap_or(0));
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn score(&self, query: &str, title: &str) -> Result<f64> {
        let doc = *self
            .doc_ids
            .get(title)
            .ok_or_else(|| Error::UnknownTitle(title.to_string()))?;
        let terms: BTreeSet<String> = word_tokens(query).into_iter().collect();
        let Bm25Params { k1, b } = self.params;
        let len_norm = 1.0 - b + b * f64::from(self.doc_lens[doc]) / self.avg_doc_len;
        let counts = &self.term_counts[doc];
        Ok(terms
            .iter()
            .filter_map(|t| counts.get(t).map(|&tf| (t, f64::from(tf))))
            .map(|(t, tf)| self.idf(t) * tf * (k1 + 1.0) / (tf + k1 * len_norm))
            .sum())
    }

    /// Scores `candidates` and sorts them by descending score, then title.
    pub fn rerank(&self, query: &str, candidates: &[String]) -> Result<Vec<(String, f64)>> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("no candidates to rerank".into()));
        }
        let mut scored = candidates
            .iter()
            .map(|c| Ok((c.clone(), self.score(query, c)?)))
            .collect::<Result<Vec<_>>>()?;
        rank_desc_by_title(&mut scored);
        Ok(scored)
    }
}
