//! Line-delimited run files: one retrieval result per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RetrievalOutput;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPath {
    pub titles: Vec<String>,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDoc {
    pub title: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub qid: String,
    pub paths: Vec<RunPath>,
    pub docs: Vec<RunDoc>,
    pub timing_ms: BTreeMap<String, f64>,
}

impl From<&RetrievalOutput> for RunRecord {
    fn from(out: &RetrievalOutput) -> Self {
        Self {
            qid: out.qid.clone(),
            paths: out
                .ranked_paths
                .iter()
                .map(|p| RunPath {
                    titles: p.path.titles().to_vec(),
                    logprob: p.logprob,
                })
                .collect(),
            docs: out
                .ranked_docs
                .iter()
                .map(|(t, s)| RunDoc {
                    title: t.clone(),
                    score: *s,
                })
                .collect(),
            timing_ms: out.timing_ms.clone(),
        }
    }
}

impl RunRecord {
    pub fn doc_titles(&self) -> Vec<&str> {
        self.docs.iter().map(|d| d.title.as_str()).collect()
    }
}

pub fn write_run_file<'a, W: Write>(mut out: W, records: impl IntoIterator<Item = &'a RunRecord>) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<run file>", e))?;
    }
    Ok(())
}

pub fn read_run_file(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_layout() {
        let rec = RunRecord {
            qid: "q1".into(),
            paths: vec![RunPath {
                titles: vec!["A".into(), "B".into()],
                logprob: -1.5,
            }],
            docs: vec![RunDoc {
                title: "A".into(),
                score: -1.5,
            }],
            timing_ms: BTreeMap::from([("seed".to_string(), 0.25)]),
        };
        let mut buf = Vec::new();
        write_run_file(&mut buf, [&rec]).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "{\"qid\":\"q1\",\"paths\":[{\"titles\":[\"A\",\"B\"],\"logprob\":-1.5}],\"docs\":[{\"title\":\"A\",\"score\":-1.5}],\"timing_ms\":{\"seed\":0.25}}\n"
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.jsonl");
        std::fs::write(&p, &buf).unwrap();
        assert_eq!(read_run_file(&p).unwrap(), vec![rec]);
    }
}
