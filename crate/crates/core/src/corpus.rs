//! Document collection as a directed hyperlink graph, plus QA dataset loading.
//!
//! Both inputs are line-delimited JSON. Titles are canonicalized with
//! [`canonical_title`] on load, so links and gold titles resolve byte-exactly
//! against the stored form.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::canonical_title;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub text: String,
    /// Outgoing hyperlinks by target title, in document order. May contain
    /// dangling targets; use [`CorpusGraph::neighbors`] for resolved links.
    #[serde(default)]
    pub links: Vec<String>,
}

/// Immutable hyperlink graph over a document collection.
#[derive(Debug, Clone)]
pub struct CorpusGraph {
    docs: Vec<Document>,
    by_title: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    dangling_link_count: usize,
}

impl CorpusGraph {
    /// Builds a graph from documents. Titles and links are canonicalized;
    /// duplicate titles are rejected and dangling links are dropped from the
    /// adjacency (but counted).
    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut stored = Vec::new();
        let mut by_title = HashMap::new();
        for mut doc in docs {
            doc.title = canonical_title(&doc.title);
            if doc.title.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "document {:?} has an empty title",
                    doc.id
                )));
            }
            doc.links = doc.links.iter().map(|l| canonical_title(l)).collect();
            if by_title.insert(doc.title.clone(), stored.len()).is_some() {
                return Err(Error::DuplicateTitle(doc.title));
            }
            stored.push(doc);
        }

        let mut dangling = 0;
        let mut adjacency = Vec::with_capacity(stored.len());
        for (idx, doc) in stored.iter().enumerate() {
            let mut out: Vec<usize> = Vec::with_capacity(doc.links.len());
            for link in &doc.links {
                match by_title.get(link) {
                    None => dangling += 1,
                    Some(&target) if target == idx => {}
                    // repeated links collapse to their first occurrence
                    Some(&target) if out.contains(&target) => {}
                    Some(&target) => out.push(target),
                }
            }
            adjacency.push(out);
        }
        if dangling > 0 {
            log::warn!("dropped {dangling} dangling hyperlinks");
        }

        Ok(Self {
            docs: stored,
            by_title,
            adjacency,
            dangling_link_count: dangling,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn dangling_link_count(&self) -> usize {
        self.dangling_link_count
    }

    /// Documents in load order.
    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, title: &str) -> Option<&Document> {
        self.by_title.get(title).map(|&i| &self.docs[i])
    }

    pub fn require(&self, title: &str) -> Result<&Document> {
        self.get(title)
            .ok_or_else(|| Error::UnknownTitle(title.to_string()))
    }

    pub fn contains(&self, title: &str) -> bool {
        self.by_title.contains_key(title)
    }

    /// Resolved out-links of `title` in stored order, without dangling
    /// targets or self-links.
    pub fn neighbors(&self, title: &str) -> Result<Vec<&Document>> {
        let idx = *self
            .by_title
            .get(title)
            .ok_or_else(|| Error::UnknownTitle(title.to_string()))?;
        Ok(self.adjacency[idx].iter().map(|&j| &self.docs[j]).collect())
    }

    pub fn max_out_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Writes the corpus back in the line-delimited input format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.docs {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusGraph> {
    let docs = read_jsonl::<Document>(path.as_ref())?;
    CorpusGraph::from_documents(docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Bridge,
    Comparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Span,
    YesNo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaExample {
    pub id: String,
    pub question: String,
    pub answer: String,
    /// Supporting titles, deduplicated, in the order given by the dataset.
    pub gold_titles: Vec<String>,
    pub qtype: QuestionType,
    pub answer_kind: AnswerKind,
}

pub fn load_qa_dataset(path: impl AsRef<Path>) -> Result<Vec<QaExample>> {
    let path = path.as_ref();
    let mut examples = read_jsonl::<QaExample>(path)?;
    for (i, ex) in examples.iter_mut().enumerate() {
        let mut gold: Vec<String> = Vec::with_capacity(ex.gold_titles.len());
        for t in &ex.gold_titles {
            let t = canonical_title(t);
            if !gold.contains(&t) {
                gold.push(t);
            }
        }
        if gold.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "gold_titles must contain at least one title".into(),
            });
        }
        ex.gold_titles = gold;
    }
    Ok(examples)
}

/// Reads one JSON record per non-blank line. Reported line numbers are
/// 1-based physical lines.
fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(title: &str, text: &str, links: &[&str]) -> Document {
        Document {
            id: title.to_lowercase(),
            title: title.into(),
            text: text.into(),
            links: links.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn write_tmp(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn titles(docs: Vec<&Document>) -> Vec<&str> {
        docs.into_iter().map(|d| d.title.as_str()).collect()
    }

    #[test]
    fn chain_file_loads() {
        let f = write_tmp(&[
            r#"{"id":"1","title":"A","text":"alpha","links":["B"]}"#,
            r#"{"id":"2","title":"B","text":"beta","links":["C"]}"#,
            r#"{"id":"3","title":"C","text":"gamma","links":[]}"#,
        ]);
        let g = load_corpus(f.path()).unwrap();
        assert_eq!(g.doc_count(), 3);
        assert_eq!(titles(g.neighbors("A").unwrap()), vec!["B"]);
        assert_eq!(g.dangling_link_count(), 0);
    }

    #[test]
    fn dangling_links_are_counted_and_dropped() {
        let g = CorpusGraph::from_documents([doc("A", "", &["Z", "B"]), doc("B", "", &[])]).unwrap();
        assert_eq!(g.dangling_link_count(), 1);
        assert_eq!(titles(g.neighbors("A").unwrap()), vec!["B"]);
    }

    #[test]
    fn duplicate_title_is_fatal() {
        let err = CorpusGraph::from_documents([doc("A", "x", &[]), doc(" A", "y", &[])]).unwrap_err();
        assert!(matches!(err, Error::DuplicateTitle(ref t) if t == "A"), "{err}");
    }

    #[test]
    fn neighbors_preserve_order_and_drop_self_links() {
        let g = CorpusGraph::from_documents([
            doc("A", "", &["A", "C", "B"]),
            doc("B", "", &[]),
            doc("C", "", &[]),
        ])
        .unwrap();
        assert_eq!(titles(g.neighbors("A").unwrap()), vec!["C", "B"]);
        assert!(g.neighbors("B").unwrap().is_empty());
        assert!(matches!(g.neighbors("Q"), Err(Error::UnknownTitle(_))));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp(&[
            r#"{"id":"1","title":"A","text":"","links":[]}"#,
            "",
            r#"{"id":"2","title":"#,
        ]);
        match load_corpus(f.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn qa_dataset_parses_and_validates() {
        let f = write_tmp(&[
            r#"{"id":"q1","question":"Who?","answer":"X","gold_titles":["A","B"],"qtype":"bridge","answer_kind":"span"}"#,
        ]);
        let qs = load_qa_dataset(f.path()).unwrap();
        assert_eq!(qs[0].qtype, QuestionType::Bridge);
        assert_eq!(qs[0].gold_titles, vec!["A", "B"]);

        let missing = write_tmp(&[
            r#"{"id":"q1","answer":"X","gold_titles":["A"],"qtype":"bridge","answer_kind":"span"}"#,
        ]);
        let err = load_qa_dataset(missing.path()).unwrap_err().to_string();
        assert!(err.contains(":1:") && err.contains("question"), "{err}");

        let bad_enum = write_tmp(&[
            r#"{"id":"q1","question":"Q","answer":"X","gold_titles":["A"],"qtype":"multi","answer_kind":"span"}"#,
        ]);
        let err = load_qa_dataset(bad_enum.path()).unwrap_err().to_string();
        assert!(err.contains("multi"), "{err}");

        let no_gold = write_tmp(&[
            r#"{"id":"q1","question":"Q","answer":"X","gold_titles":[],"qtype":"bridge","answer_kind":"span"}"#,
        ]);
        assert!(load_qa_dataset(no_gold.path()).is_err());
    }

    #[test]
    fn round_trip_preserves_graph() {
        let g = CorpusGraph::from_documents([
            doc("A", "alpha text", &["B", "Missing", "A"]),
            doc("B", "", &["A"]),
            doc("Caf\u{e9}", "c", &["B"]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        g.write_jsonl(&mut buf).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&buf).unwrap();
        let back = load_corpus(f.path()).unwrap();
        assert_eq!(back.documents(), g.documents());
        for d in g.documents() {
            assert_eq!(titles(back.neighbors(&d.title).unwrap()), titles(g.neighbors(&d.title).unwrap()));
        }
        assert_eq!(back.dangling_link_count(), g.dangling_link_count());
    }
}
