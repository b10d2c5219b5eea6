//! Reference implementations written independently of the library, used
//! as test oracles, plus shared fixture generators.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use hoprank_core::corpus::{CorpusGraph, Document};
use proptest::prelude::*;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn doc(title: &str, text: &str, links: &[&str]) -> Document {
    Document {
        id: title.to_string(),
        title: title.to_string(),
        text: text.to_string(),
        links: links.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn graph_of(docs: &[(&str, &str)]) -> CorpusGraph {
    CorpusGraph::from_documents(docs.iter().map(|(t, x)| doc(t, x, &[]))).unwrap()
}

/// Lowercased maximal alphanumeric runs.
pub fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

pub fn grams(s: &str) -> Vec<String> {
    let t = tokens(s);
    let mut out = t.clone();
    for i in 1..t.len() {
        out.push(t[i - 1].clone() + " " + &t[i]);
    }
    out
}

fn counts(items: Vec<String>) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i).or_insert(0.0) += 1.0;
    }
    m
}

/// Dense TF-IDF cosine over the full term space, every document scored.
/// Returns (title, score) by descending score then title.
pub fn dense_cosine_ranking(docs: &[(String, String)], query: &str) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let doc_counts: Vec<BTreeMap<String, f64>> = docs.iter().map(|(_, t)| counts(grams(t))).collect();
    let vocab: BTreeSet<&String> = doc_counts.iter().flat_map(|c| c.keys()).collect();
    let vocab: Vec<&String> = vocab.into_iter().collect();
    let idf: Vec<f64> = vocab
        .iter()
        .map(|term| {
            let df = doc_counts.iter().filter(|c| c.contains_key(*term)).count() as f64;
            f64::max(0.0, ((n - df + 0.5) / (df + 0.5)).ln())
        })
        .collect();
    let dense = |c: &BTreeMap<String, f64>| -> Vec<f64> {
        vocab
            .iter()
            .zip(&idf)
            .map(|(t, w)| c.get(*t).map_or(0.0, |tf| (1.0 + tf).ln() * w))
            .collect()
    };
    let q = dense(&counts(grams(query)));
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out: Vec<(String, f64)> = docs
        .iter()
        .zip(&doc_counts)
        .map(|((title, _), c)| {
            let d = dense(c);
            let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = q.iter().zip(&d).map(|(a, b)| a * b).sum();
            let s = if qn > 0.0 && dn > 0.0 { dot / (qn * dn) } else { 0.0 };
            (title.clone(), s)
        })
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

/// Okapi BM25 over unigrams, each distinct query term counted once.
pub fn okapi_bm25(docs: &[(String, String)], query: &str, k1: f64, b: f64) -> HashMap<String, f64> {
    let n = docs.len() as f64;
    let toks: Vec<Vec<String>> = docs.iter().map(|(_, t)| tokens(t)).collect();
    let avgdl = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let qterms: BTreeSet<String> = tokens(query).into_iter().collect();
    let mut out = HashMap::new();
    for ((title, _), dt) in docs.iter().zip(&toks) {
        let mut s = 0.0;
        for q in &qterms {
            let tf = dt.iter().filter(|t| *t == q).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = toks.iter().filter(|d| d.contains(q)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dt.len() as f64 / avgdl));
        }
        out.insert(title.clone(), s);
    }
    out
}

/// Add-one smoothed unigram log-likelihood of `continuation` given
/// `context`, divided by `temperature`.
pub fn unigram_logprob(context: &str, continuation: &str, temperature: f64) -> f64 {
    let c = tokens(context);
    let q = tokens(continuation);
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for t in &c {
        *freq.entry(t).or_default() += 1;
    }
    let vocab: BTreeSet<&str> = c.iter().chain(&q).map(String::as_str).collect();
    let denom = (c.len() + vocab.len()) as f64;
    let sum: f64 = q
        .iter()
        .map(|t| ((freq.get(t.as_str()).copied().unwrap_or(0) as f64 + 1.0) / denom).ln())
        .sum();
    sum / temperature
}

/// Plain prompt for short documents that never hit a token limit.
pub fn plain_prompt(path: &[&Document]) -> String {
    let mut s = String::new();
    for d in path {
        s.push_str(&format!("Document: {}. {}\n", d.title, d.text));
    }
    s.push_str("Question:");
    s
}

/// Every simple path of 1..=h documents along hyperlinks, scored with the
/// unigram oracle. Returns (paths by descending score then titles, docs
/// by descending max-path score then title).
pub fn exhaustive_ranking(
    docs: &[Document],
    question: &str,
    h: usize,
    temperature: f64,
) -> (Vec<(Vec<String>, f64)>, Vec<(String, f64)>) {
    let by_title: HashMap<&str, &Document> = docs.iter().map(|d| (d.title.as_str(), d)).collect();
    let mut paths: Vec<Vec<String>> = Vec::new();
    let mut frontier: Vec<Vec<String>> = docs.iter().map(|d| vec![d.title.clone()]).collect();
    for _ in 0..h {
        let mut next = Vec::new();
        for p in &frontier {
            let last = by_title[p.last().unwrap().as_str()];
            let mut seen = BTreeSet::new();
            for l in &last.links {
                if by_title.contains_key(l.as_str()) && !p.contains(l) && seen.insert(l) {
                    let mut q = p.clone();
                    q.push(l.clone());
                    next.push(q);
                }
            }
        }
        paths.append(&mut frontier);
        frontier = next;
    }
    let mut scored: Vec<(Vec<String>, f64)> = paths
        .into_iter()
        .map(|p| {
            let ds: Vec<&Document> = p.iter().map(|t| by_title[t.as_str()]).collect();
            let s = unigram_logprob(&plain_prompt(&ds), question, temperature);
            (p, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for (p, s) in &scored {
        for t in p {
            let e = best.entry(t.clone()).or_insert(f64::NEG_INFINITY);
            *e = e.max(*s);
        }
    }
    let mut docs_ranked: Vec<(String, f64)> = best.into_iter().collect();
    docs_ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    (scored, docs_ranked)
}

const WORDS: &[&str] = &[
    "river", "town", "painter", "castle", "music", "king", "city", "born", "film", "band", "album", "war",
    "ship", "bridge", "lake", "north", "river", "the", "of", "a", "in",
];

#[derive(Debug, Clone)]
pub struct RandomCorpus {
    pub docs: Vec<Document>,
    pub question: String,
}

fn words(min: usize, max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), min..=max).prop_map(|w| w.join(" "))
}

/// Corpora of 1..=max_docs short documents with random (possibly
/// duplicated or self-referencing) links.
pub fn random_corpus(max_docs: usize) -> impl Strategy<Value = RandomCorpus> {
    (1..=max_docs)
        .prop_flat_map(|n| {
            let texts = prop::collection::vec(words(1, 10), n);
            let links = prop::collection::vec(prop::collection::vec(0..n, 0..=4), n);
            (texts, links, words(1, 8))
        })
        .prop_map(|(texts, links, question)| {
            let docs = texts
                .into_iter()
                .zip(links)
                .enumerate()
                .map(|(i, (text, ls))| Document {
                    id: format!("d{i}"),
                    title: format!("D{i:02}"),
                    text,
                    links: ls.into_iter().map(|j| format!("D{j:02}")).collect(),
                })
                .collect();
            RandomCorpus { docs, question }
        })
}
