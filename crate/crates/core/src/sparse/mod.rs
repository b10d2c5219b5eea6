//! First-stage sparse retrieval: TF-IDF seeding and hyperlink pruning, and
//! the BM25 baseline reranker.

mod bm25;
mod tfidf;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bm25::{Bm25Index, Bm25Params};
pub use tfidf::{idf as tfidf_idf, TfIdfIndex};

use crate::corpus::CorpusGraph;
use crate::error::{Error, Result};

pub const INDEX_FORMAT: &str = "hoprank-sparse-index";
pub const INDEX_FORMAT_VERSION: u32 = 1;

/// Sorts by descending score, then ascending title.
pub fn rank_desc_by_title(items: &mut [(String, f64)]) {
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

/// TF-IDF seeds plus their out-links, reranked by BM25. Each title appears
/// once.
pub fn baseline_tfidf_bm25(
    graph: &CorpusGraph,
    tfidf: &TfIdfIndex,
    bm25: &Bm25Index,
    query: &str,
    f: usize,
) -> Result<Vec<(String, f64)>> {
    let mut candidates: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (seed, _) in tfidf.retrieve(query, f) {
        let links: Vec<String> = graph.neighbors(&seed)?.into_iter().map(|d| d.title.clone()).collect();
        for t in std::iter::once(seed).chain(links) {
            if seen.insert(t.clone()) {
                candidates.push(t);
            }
        }
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    bm25.rerank(query, &candidates)
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
}

/// Both sparse indexes, persisted together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseIndexes {
    pub tfidf: TfIdfIndex,
    pub bm25: Bm25Index,
}

impl SparseIndexes {
    pub fn build(graph: &CorpusGraph, params: Bm25Params) -> Result<Self> {
        Ok(Self {
            tfidf: TfIdfIndex::build(graph)?,
            bm25: Bm25Index::build(graph, params)?,
        })
    }

    /// Line 1 is a JSON header with the format version, line 2 the indexes.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let header = IndexHeader {
            format: INDEX_FORMAT.into(),
            version: INDEX_FORMAT_VERSION,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut header_line = String::new();
        reader
            .read_line(&mut header_line)
            .map_err(|e| Error::io(path, e))?;
        let header: IndexHeader = serde_json::from_str(&header_line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("bad index header: {e}"),
        })?;
        if header.format != INDEX_FORMAT || header.version != INDEX_FORMAT_VERSION {
            return Err(Error::IndexVersion {
                expected: INDEX_FORMAT_VERSION,
                found: format!("{} v{}", header.format, header.version),
            });
        }
        let mut body = String::new();
        reader
            .read_line(&mut body)
            .map_err(|e| Error::io(path, e))?;
        let mut indexes: SparseIndexes = serde_json::from_str(&body).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 2,
            message: e.to_string(),
        })?;
        indexes.tfidf.rebuild_lookup();
        indexes.bm25.rebuild_lookup();
        Ok(indexes)
    }
}
