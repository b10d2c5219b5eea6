//! Multi-hop path retrieval: TF-IDF seeding, language-model path scoring,
//! top-K pruning, top-L hyperlink expansion and document score aggregation.

mod engine;
mod runfile;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use engine::{aggregate_doc_scores, expand_path, retrieve, score_paths, sort_scored_paths, PathRetriever};
pub use runfile::{read_run_file, write_run_file, RunDoc, RunPath, RunRecord};

use crate::error::{Error, Result};
use crate::prompting::{Demonstration, EnsembleMode, Instruction, PromptConfig};

/// Ordered chain of distinct document titles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<String>);

impl Path {
    pub fn new(titles: Vec<String>) -> Result<Self> {
        if titles.is_empty() {
            return Err(Error::InvalidArgument("a path needs at least one document".into()));
        }
        for (i, t) in titles.iter().enumerate() {
            if titles[..i].contains(t) {
                return Err(Error::InvalidArgument(format!("title {t:?} repeats within a path")));
            }
        }
        Ok(Self(titles))
    }

    pub fn single(title: impl Into<String>) -> Self {
        Self(vec![title.into()])
    }

    pub fn titles(&self) -> &[String] {
        &self.0
    }

    pub fn hop(&self) -> usize {
        self.0.len()
    }

    pub fn last(&self) -> &str {
        self.0.last().expect("paths are never empty")
    }

    pub fn contains(&self, title: &str) -> bool {
        self.0.iter().any(|t| t == title)
    }

    pub(crate) fn extended(&self, title: &str) -> Self {
        let mut titles = self.0.clone();
        titles.push(title.to_string());
        Self(titles)
    }
}

impl std::fmt::Display for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0.join(" -> "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub path: Path,
    pub logprob: f64,
    /// Score under each instruction (demonstration-ensembled), present when
    /// at most one demonstration group is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_instruction: Option<Vec<(usize, f64)>>,
    /// Score under each demonstration group (instruction-ensembled), present
    /// when more than one group is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_demo_group: Option<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    /// TF-IDF seed documents.
    pub f: usize,
    /// Maximum path length in documents.
    pub h: usize,
    /// Paths kept after scoring hop `i + 1`; length must be `h - 1`.
    pub k_per_hop: Vec<usize>,
    /// Hyperlinks kept per expanded path.
    pub l: usize,
    pub temperature: f64,
    pub instructions: Vec<Instruction>,
    pub instruction_ensemble_mode: EnsembleMode,
    pub demos: Vec<Demonstration>,
    pub demo_group_size: usize,
    pub demo_ensemble_mode: EnsembleMode,
    /// Score documents independently and sum their scores along a path.
    pub single_hop_mode: bool,
    /// Divide each log-likelihood by the continuation token count.
    pub length_normalize: bool,
    pub batch_size: usize,
    pub prompt: PromptConfig,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            f: 100,
            h: 2,
            k_per_hop: vec![5],
            l: 3,
            temperature: 1.4,
            instructions: Vec::new(),
            instruction_ensemble_mode: EnsembleMode::Max,
            demos: Vec::new(),
            demo_group_size: 2,
            demo_ensemble_mode: EnsembleMode::Max,
            single_hop_mode: false,
            length_normalize: false,
            batch_size: 8,
            prompt: PromptConfig::default(),
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.f == 0 || self.h == 0 || self.l == 0 || self.batch_size == 0 || self.demo_group_size == 0 {
            return bad("f, h, l, batch_size and demo_group_size must be at least 1".into());
        }
        if self.k_per_hop.len() != self.h - 1 {
            return bad(format!(
                "k_per_hop has {} entries but h = {} requires {}",
                self.k_per_hop.len(),
                self.h,
                self.h - 1
            ));
        }
        if self.k_per_hop.contains(&0) {
            return bad("k_per_hop entries must be at least 1".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature must be positive, got {}", self.temperature));
        }
        for inst in &self.instructions {
            inst.validate()?;
        }
        for d in &self.demos {
            d.validate()?;
        }
        self.prompt.validate()
    }

    /// Configuration with pruning effectively disabled: every seed, every
    /// frontier path and every hyperlink is kept.
    pub fn exhaustive(h: usize) -> Self {
        Self {
            f: usize::MAX,
            h,
            k_per_hop: vec![usize::MAX; h.saturating_sub(1)],
            l: usize::MAX,
            ..Self::default()
        }
    }
}

/// Request and path counts per hop, for cost accounting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostStats {
    pub scored_paths: Vec<usize>,
    pub requests: Vec<usize>,
    pub truncated_responses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOutput {
    pub qid: String,
    pub ranked_paths: Vec<ScoredPath>,
    pub ranked_docs: Vec<(String, f64)>,
    /// Wall-clock milliseconds per stage.
    pub timing_ms: BTreeMap<String, f64>,
    pub stats: CostStats,
    pub warnings: Vec<String>,
}

impl RetrievalOutput {
    pub fn empty(qid: impl Into<String>) -> Self {
        Self {
            qid: qid.into(),
            ranked_paths: Vec::new(),
            ranked_docs: Vec::new(),
            timing_ms: BTreeMap::new(),
            stats: CostStats::default(),
            warnings: Vec::new(),
        }
    }

    pub fn doc_titles(&self) -> Vec<&str> {
        self.ranked_docs.iter().map(|(t, _)| t.as_str()).collect()
    }
}
