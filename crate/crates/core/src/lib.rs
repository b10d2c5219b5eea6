//! Multi-hop document path retrieval.
//!
//! Candidate paths are seeded from a TF-IDF index, grown along hyperlinks
//! and reranked by the likelihood a language model assigns to the question
//! given a prompt built from the path. Document scores take the maximum
//! over every scored path that contains the document.
//!
//! ```
//! use std::sync::Arc;
//! use hoprank_core::corpus::{CorpusGraph, Document};
//! use hoprank_core::pathrank::{retrieve, RetrievalConfig};
//! use hoprank_core::scorer::MockBackend;
//! use hoprank_core::sparse::TfIdfIndex;
//!
//! let doc = |t: &str, x: &str, l: &[&str]| Document {
//!     id: t.into(),
//!     title: t.into(),
//!     text: x.into(),
//!     links: l.iter().map(|s| s.to_string()).collect(),
//! };
//! let graph = CorpusGraph::from_documents([
//!     doc("Lyon", "Lyon is a city on the Rhone", &["Rhone"]),
//!     doc("Rhone", "The Rhone flows into the Mediterranean", &[]),
//!     doc("Oslo", "Oslo is a northern capital", &[]),
//! ])
//! .unwrap();
//! let tfidf = TfIdfIndex::build(&graph).unwrap();
//! let out = retrieve("q1", "Where does the river of Lyon flow?", &graph, &tfidf, &MockBackend::new(),
//!     &RetrievalConfig::default()).unwrap();
//! assert_eq!(out.ranked_docs.len(), 3);
//! ```

pub mod corpus;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod pathrank;
pub mod prompting;
pub mod registry;
pub mod scorer;
pub mod sparse;
pub mod text;

pub use error::{Error, Result, ScorerError};
