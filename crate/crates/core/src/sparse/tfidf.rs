//! Unigram+bigram TF-IDF index with cosine scoring.
//!
//! Term weight is `ln(1 + tf) * idf` with
//! `idf = max(0, ln((N - df + 0.5) / (df + 0.5)))`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusGraph;
use crate::error::{Error, Result};
use crate::sparse::rank_desc_by_title;
use crate::text::unigrams_and_bigrams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfIndex {
    /// Sorted vocabulary; a term's id is its position.
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    idf: Vec<f64>,
    titles: Vec<String>,
    /// Per-document (term id, weight), ascending term id, zero weights omitted.
    vectors: Vec<Vec<(u32, f64)>>,
    norms: Vec<f64>,
    #[serde(skip)]
    lookup: Lookup,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Lookup {
    term_ids: HashMap<String, u32>,
    doc_ids: HashMap<String, usize>,
    /// term id -> (doc id, weight)
    postings: Vec<Vec<(usize, f64)>>,
}

pub fn idf(doc_count: usize, doc_freq: u32) -> f64 {
    let n = doc_count as f64;
    let df = f64::from(doc_freq);
    ((n - df + 0.5) / (df + 0.5)).ln().max(0.0)
}

fn term_weight(tf: u32, idf: f64) -> f64 {
    (1.0 + f64::from(tf)).ln() * idf
}

fn count_terms(text: &str) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for term in unigrams_and_bigrams(text) {
        *counts.entry(term).or_insert(0) += 1;
    }
    counts
}

impl TfIdfIndex {
    pub fn build(graph: &CorpusGraph) -> Result<Self> {
        if graph.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let per_doc: Vec<BTreeMap<String, u32>> = graph
            .documents()
            .iter()
            .map(|d| count_terms(&d.text))
            .collect();

        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        for counts in &per_doc {
            for term in counts.keys() {
                *df.entry(term.as_str()).or_insert(0) += 1;
            }
        }
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let doc_freq: Vec<u32> = df.values().copied().collect();
        let n = graph.doc_count();
        let idf_values: Vec<f64> = doc_freq.iter().map(|&f| idf(n, f)).collect();
        let term_ids: HashMap<&str, u32> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect();

        let mut vectors = Vec::with_capacity(n);
        let mut norms = Vec::with_capacity(n);
        for counts in &per_doc {
            // BTreeMap iteration is sorted, and ids follow sorted order.
            let vec: Vec<(u32, f64)> = counts
                .iter()
                .map(|(t, &tf)| {
                    let id = term_ids[t.as_str()];
                    (id, term_weight(tf, idf_values[id as usize]))
                })
                .filter(|&(_, w)| w > 0.0)
                .collect();
            norms.push(vec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt());
            vectors.push(vec);
        }

        let mut index = Self {
            terms,
            doc_freq,
            idf: idf_values,
            titles: graph.documents().iter().map(|d| d.title.clone()).collect(),
            vectors,
            norms,
            lookup: Lookup::default(),
        };
        index.rebuild_lookup();
        Ok(index)
    }

    pub(crate) fn rebuild_lookup(&mut self) {
        let term_ids = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let doc_ids = self
            .titles
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut postings = vec![Vec::new(); self.terms.len()];
        for (doc, vec) in self.vectors.iter().enumerate() {
            for &(term, w) in vec {
                postings[term as usize].push((doc, w));
            }
        }
        self.lookup = Lookup {
            term_ids,
            doc_ids,
            postings,
        };
    }

    pub fn doc_count(&self) -> usize {
        self.titles.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.lookup.term_ids.get(term).map(|&i| self.idf[i as usize])
    }

    pub fn doc_freq_of(&self, term: &str) -> Option<u32> {
        self.lookup.term_ids.get(term).map(|&i| self.doc_freq[i as usize])
    }

    /// Stored weight vector of a document as (term, weight) pairs.
    pub fn doc_vector(&self, title: &str) -> Result<Vec<(&str, f64)>> {
        let doc = self.doc_id(title)?;
        Ok(self.vectors[doc]
            .iter()
            .map(|&(t, w)| (self.terms[t as usize].as_str(), w))
            .collect())
    }

    fn doc_id(&self, title: &str) -> Result<usize> {
        self.lookup
            .doc_ids
            .get(title)
            .copied()
            .ok_or_else(|| Error::UnknownTitle(title.to_string()))
    }

    /// Query weights over the index vocabulary, ascending term id. Unknown
    /// terms are ignored.
    fn query_vector(&self, query: &str) -> Vec<(u32, f64)> {
        let mut vec: Vec<(u32, f64)> = count_terms(query)
            .into_iter()
            .filter_map(|(t, tf)| {
                let id = *self.lookup.term_ids.get(&t)?;
                let w = term_weight(tf, self.idf[id as usize]);
                (w > 0.0).then_some((id, w))
            })
            .collect();
        vec.sort_unstable_by_key(|&(id, _)| id);
        vec
    }

    /// Top-`f` documents by cosine similarity to `query`, ties broken by
    /// ascending title. Zero-similarity documents are included when `f`
    /// exceeds the number of matching documents.
    pub fn retrieve(&self, query: &str, f: usize) -> Vec<(String, f64)> {
        let q = self.query_vector(query);
        let q_norm = norm(&q);
        let mut scores = vec![0.0f64; self.doc_count()];
        if q_norm > 0.0 {
            for &(term, qw) in &q {
                for &(doc, dw) in &self.lookup.postings[term as usize] {
                    scores[doc] += qw * dw;
                }
            }
            for (doc, s) in scores.iter_mut().enumerate() {
                let d = self.norms[doc];
                *s = if d > 0.0 { *s / (q_norm * d) } else { 0.0 };
            }
        }
        let mut ranked: Vec<(String, f64)> = self
            .titles
            .iter()
            .cloned()
            .zip(scores)
            .collect();
        rank_desc_by_title(&mut ranked);
        ranked.truncate(f);
        ranked
    }

    /// Cosine similarity between `query` and the stored vector of `title`.
    pub fn similarity(&self, query: &str, title: &str) -> Result<f64> {
        let doc = self.doc_id(title)?;
        let q = self.query_vector(query);
        let (qn, dn) = (norm(&q), self.norms[doc]);
        if qn == 0.0 || dn == 0.0 {
            return Ok(0.0);
        }
        Ok(sparse_dot(&q, &self.vectors[doc]) / (qn * dn))
    }
}

fn norm(v: &[(u32, f64)]) -> f64 {
    v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}
