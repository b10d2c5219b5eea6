//! Name-based registries for the interchangeable parts of the engine:
//! scoring backends and document rankers. Each entry is a factory behind a
//! common trait, selected at runtime from configuration or CLI flags.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::corpus::CorpusGraph;
use crate::error::{Error, Result};
use crate::pathrank::{Path, PathRetriever, RetrievalConfig, RetrievalOutput, ScoredPath};
use crate::scorer::{HttpBackend, MockBackend, RetryPolicy, ScorerBackend};
use crate::sparse::{baseline_tfidf_bm25, SparseIndexes};

/// Produces a document ranking for a question.
pub trait Ranker: Send + Sync {
    fn name(&self) -> &str;

    fn rank(&self, qid: &str, question: &str) -> Result<RetrievalOutput>;

    /// Resolved settings recorded in evaluation reports.
    fn config_snapshot(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

/// Everything a ranker factory may draw on.
#[derive(Clone)]
pub struct RankerContext {
    pub graph: Arc<CorpusGraph>,
    pub indexes: Arc<SparseIndexes>,
    pub backend: Option<Arc<dyn ScorerBackend>>,
    pub config: RetrievalConfig,
}

pub type RankerFactory = fn(&RankerContext) -> Result<Box<dyn Ranker>>;

pub struct RankerRegistry {
    factories: BTreeMap<String, RankerFactory>,
}

impl Default for RankerRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("pathrank", |ctx| {
            let backend = ctx.backend.clone().ok_or_else(|| {
                Error::InvalidArgument("the pathrank ranker needs a scoring backend".into())
            })?;
            ctx.config.validate()?;
            Ok(Box::new(PathRetriever {
                graph: Arc::clone(&ctx.graph),
                indexes: Arc::clone(&ctx.indexes),
                backend,
                config: ctx.config.clone(),
            }))
        });
        r.register("tfidf", |ctx| {
            Ok(Box::new(TfIdfRanker {
                indexes: Arc::clone(&ctx.indexes),
                f: ctx.config.f,
            }))
        });
        r.register("tfidf-bm25", |ctx| {
            Ok(Box::new(TfIdfBm25Ranker {
                graph: Arc::clone(&ctx.graph),
                indexes: Arc::clone(&ctx.indexes),
                f: ctx.config.f,
            }))
        });
        r
    }
}

impl RankerRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, factory: RankerFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, ctx: &RankerContext) -> Result<Box<dyn Ranker>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: "ranker",
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        factory(ctx)
    }
}

impl Ranker for PathRetriever {
    fn name(&self) -> &str {
        "pathrank"
    }

    fn rank(&self, qid: &str, question: &str) -> Result<RetrievalOutput> {
        self.retrieve(qid, question)
    }

    fn config_snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.config).unwrap_or_default();
        if let Some(obj) = v.as_object_mut() {
            obj.insert("backend".into(), serde_json::to_value(self.backend.info()).unwrap_or_default());
        }
        v
    }
}

fn one_hop_output(qid: &str, ranked: Vec<(String, f64)>) -> RetrievalOutput {
    let mut out = RetrievalOutput::empty(qid);
    out.ranked_paths = ranked
        .iter()
        .map(|(t, s)| ScoredPath {
            path: Path::single(t.clone()),
            logprob: *s,
            per_instruction: None,
            per_demo_group: None,
        })
        .collect();
    out.ranked_docs = ranked;
    out
}

/// TF-IDF cosine ranking of the whole corpus, truncated to `f`.
pub struct TfIdfRanker {
    indexes: Arc<SparseIndexes>,
    f: usize,
}

impl Ranker for TfIdfRanker {
    fn name(&self) -> &str {
        "tfidf"
    }

    fn rank(&self, qid: &str, question: &str) -> Result<RetrievalOutput> {
        Ok(one_hop_output(qid, self.indexes.tfidf.retrieve(question, self.f)))
    }

    fn config_snapshot(&self) -> serde_json::Value {
        serde_json::json!({ "f": self.f })
    }
}

/// TF-IDF seeds and their hyperlinked documents, reranked with BM25.
pub struct TfIdfBm25Ranker {
    graph: Arc<CorpusGraph>,
    indexes: Arc<SparseIndexes>,
    f: usize,
}

impl Ranker for TfIdfBm25Ranker {
    fn name(&self) -> &str {
        "tfidf-bm25"
    }

    fn rank(&self, qid: &str, question: &str) -> Result<RetrievalOutput> {
        let ranked = baseline_tfidf_bm25(&self.graph, &self.indexes.tfidf, &self.indexes.bm25, question, self.f)?;
        Ok(one_hop_output(qid, ranked))
    }

    fn config_snapshot(&self) -> serde_json::Value {
        let p = self.indexes.bm25.params();
        serde_json::json!({ "f": self.f, "k1": p.k1, "b": p.b })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BackendOptions {
    pub retry: RetryPolicy,
}

type BackendMatcher = fn(&str) -> bool;
type BackendFactory = fn(&str, &BackendOptions) -> Result<Arc<dyn ScorerBackend>>;

struct BackendEntry {
    name: String,
    matches: BackendMatcher,
    factory: BackendFactory,
}

/// Resolves a backend name such as `mock` or `http://host:port`. An exact
/// name match wins; otherwise entries are tried in registration order.
pub struct BackendRegistry {
    entries: Vec<BackendEntry>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = Self { entries: Vec::new() };
        r.register("mock", |s| s == "mock", |_, _| Ok(Arc::new(MockBackend::new())));
        r.register(
            "http",
            |s| s.starts_with("http://") || s.starts_with("https://") || s.contains(':'),
            |target, opts| Ok(Arc::new(HttpBackend::connect(target, opts.retry)?)),
        );
        r
    }
}

impl BackendRegistry {
    pub fn register(&mut self, name: &str, matches: BackendMatcher, factory: BackendFactory) {
        self.entries.push(BackendEntry {
            name: name.to_string(),
            matches,
            factory,
        });
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn resolve(&self, target: &str, opts: &BackendOptions) -> Result<Arc<dyn ScorerBackend>> {
        let target = target.trim();
        let entry = self
            .entries
            .iter()
            .find(|e| e.name == target)
            .or_else(|| self.entries.iter().find(|e| (e.matches)(target)))
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "backend",
                name: target.to_string(),
                available: self.names().join(", "),
            })?;
        (entry.factory)(target, opts)
    }
}
