//! Resolution of run settings: command-line flags over a TOML config file
//! over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use hoprank_core::corpus::{load_qa_dataset, CorpusGraph};
use hoprank_core::pathrank::RetrievalConfig;
use hoprank_core::prompting::{
    demonstrations_from_examples, load_instructions, sample_demos, DocOrder, EnsembleMode, Instruction,
    InstructionPosition,
};
use serde::{Deserialize, Serialize};

/// Settings accepted in a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub backend: Option<String>,
    pub ranker: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub f: Option<usize>,
    pub k: Option<Vec<usize>>,
    pub l: Option<usize>,
    pub hops: Option<usize>,
    pub temperature: Option<f64>,
    pub ensemble: Option<EnsembleMode>,
    pub instructions: Option<PathBuf>,
    pub n_instructions: Option<usize>,
    pub instruction_position: Option<InstructionPosition>,
    pub demos: Option<PathBuf>,
    pub n_demos: Option<usize>,
    pub single_hop: Option<bool>,
    pub invert_doc_order: Option<bool>,
    pub length_normalize: Option<bool>,
    pub batch_size: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Inputs shared by every command that reads a corpus.
#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Corpus JSONL file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Prebuilt sparse index; built from the corpus when omitted.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// `mock`, or the address of a scoring service.
    #[arg(long, env = "HOPRANK_BACKEND")]
    pub backend: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Question-level worker threads; all cores when omitted.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RetrievalArgs {
    /// Seed documents taken from TF-IDF.
    #[arg(long)]
    pub f: Option<usize>,
    /// Paths kept per hop, comma separated; the last value repeats.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Hyperlinks followed per path.
    #[arg(long)]
    pub l: Option<usize>,
    /// Maximum path length in documents.
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Ensembling over instructions and demonstration groups: max or mean.
    #[arg(long)]
    pub ensemble: Option<EnsembleMode>,
    /// Instruction JSONL file, best first.
    #[arg(long)]
    pub instructions: Option<PathBuf>,
    /// Use only the first N instructions of the file.
    #[arg(long)]
    pub n_instructions: Option<usize>,
    /// Force every instruction to before_path or after_path.
    #[arg(long)]
    pub instruction_position: Option<InstructionPosition>,
    /// Labeled QA JSONL whose gold paths serve as demonstrations.
    #[arg(long)]
    pub demos: Option<PathBuf>,
    #[arg(long)]
    pub n_demos: Option<usize>,
    /// Score each document alone and sum along paths.
    #[arg(long)]
    pub single_hop: bool,
    #[arg(long)]
    pub invert_doc_order: bool,
    /// Divide log-likelihoods by the question token count.
    #[arg(long)]
    pub length_normalize: bool,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

/// Fully resolved settings, echoed into run manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub corpus: PathBuf,
    pub index: Option<PathBuf>,
    pub backend: String,
    pub seed: u64,
    pub workers: usize,
    pub instructions_file: Option<PathBuf>,
    pub demos_file: Option<PathBuf>,
    pub retrieval: RetrievalConfig,
}

impl Resolved {
    /// Files whose digests belong in the manifest.
    pub fn inputs(&self) -> Vec<PathBuf> {
        let mut v = vec![self.corpus.clone()];
        v.extend(self.index.clone());
        v.extend(self.instructions_file.clone());
        v.extend(self.demos_file.clone());
        v
    }
}

fn k_per_hop(k: Option<Vec<usize>>, hops: usize, default: &[usize]) -> Result<Vec<usize>> {
    let given = k.unwrap_or_else(|| default.to_vec());
    let need = hops.saturating_sub(1);
    if need == 0 {
        return Ok(Vec::new());
    }
    let Some(&last) = given.last() else {
        bail!("--k needs at least one value when --hops is above 1");
    };
    if given.len() > need {
        bail!("--k has {} values but --hops {hops} uses {need}", given.len());
    }
    let mut out = given;
    out.resize(need, last);
    Ok(out)
}

pub fn resolve(file: &FileConfig, input: &InputArgs, args: &RetrievalArgs) -> Result<Resolved> {
    let defaults = RetrievalConfig::default();
    let corpus = input
        .corpus
        .clone()
        .or_else(|| file.corpus.clone())
        .context("no corpus given; pass --corpus or set it in the config file")?;
    let hops = args.hops.or(file.hops).unwrap_or(defaults.h);
    let ensemble = args.ensemble.or(file.ensemble).unwrap_or_default();

    let mut retrieval = RetrievalConfig {
        f: args.f.or(file.f).unwrap_or(defaults.f),
        h: hops,
        k_per_hop: k_per_hop(args.k.clone().or_else(|| file.k.clone()), hops, &defaults.k_per_hop)?,
        l: args.l.or(file.l).unwrap_or(defaults.l),
        temperature: args.temperature.or(file.temperature).unwrap_or(defaults.temperature),
        instruction_ensemble_mode: ensemble,
        demo_ensemble_mode: ensemble,
        single_hop_mode: args.single_hop || file.single_hop.unwrap_or(false),
        length_normalize: args.length_normalize || file.length_normalize.unwrap_or(false),
        batch_size: args.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
        ..defaults
    };
    retrieval.prompt.instruction_position = args.instruction_position.or(file.instruction_position);
    if args.invert_doc_order || file.invert_doc_order.unwrap_or(false) {
        retrieval.prompt.doc_order = DocOrder::Inverted;
    }

    Ok(Resolved {
        corpus,
        index: input.index.clone().or_else(|| file.index.clone()),
        backend: input
            .backend
            .clone()
            .or_else(|| file.backend.clone())
            .unwrap_or_else(|| "mock".to_string()),
        seed: input.seed.or(file.seed).unwrap_or(0),
        workers: input.workers.or(file.workers).unwrap_or(0),
        instructions_file: args.instructions.clone().or_else(|| file.instructions.clone()),
        demos_file: args.demos.clone().or_else(|| file.demos.clone()),
        retrieval,
    })
}

/// Loads instructions and demonstrations named by the resolved settings.
pub fn attach_prompt_material(
    resolved: &mut Resolved,
    graph: &CorpusGraph,
    file: &FileConfig,
    args: &RetrievalArgs,
) -> Result<()> {
    if let Some(path) = &resolved.instructions_file {
        let records = load_instructions(path)?;
        let n = args.n_instructions.or(file.n_instructions).unwrap_or(records.len());
        resolved.retrieval.instructions = records.iter().take(n).map(Instruction::from).collect();
    }
    if let Some(path) = &resolved.demos_file {
        let examples = load_qa_dataset(path)?;
        let pool = demonstrations_from_examples(&examples, graph)?;
        let n = args.n_demos.or(file.n_demos).unwrap_or(pool.len());
        resolved.retrieval.demos = sample_demos(&pool, n, resolved.seed)?;
    } else if args.n_demos.or(file.n_demos).is_some_and(|n| n > 0) {
        bail!("--n-demos needs a --demos file");
    }
    resolved.retrieval.validate()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: FileConfig = toml::from_str(
            "corpus = \"c.jsonl\"\nf = 20\ntemperature = 1.0\nk = [7]\nensemble = \"mean\"\ninvert_doc_order = true\n",
        )
        .unwrap();
        let input = InputArgs::default();
        let args = RetrievalArgs {
            f: Some(9),
            hops: Some(3),
            ..RetrievalArgs::default()
        };
        let r = resolve(&file, &input, &args).unwrap();
        assert_eq!(r.retrieval.f, 9);
        assert_eq!(r.retrieval.temperature, 1.0);
        assert_eq!(r.retrieval.l, 3);
        assert_eq!(r.retrieval.k_per_hop, vec![7, 7]);
        assert_eq!(r.retrieval.instruction_ensemble_mode, EnsembleMode::Mean);
        assert_eq!(r.retrieval.prompt.doc_order, DocOrder::Inverted);
        assert_eq!(r.backend, "mock");
        assert_eq!(r.corpus, PathBuf::from("c.jsonl"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("tempurature = 1.0").is_err());
    }

    #[test]
    fn k_expansion() {
        assert_eq!(k_per_hop(None, 2, &[5]).unwrap(), vec![5]);
        assert_eq!(k_per_hop(Some(vec![4, 2]), 3, &[5]).unwrap(), vec![4, 2]);
        assert_eq!(k_per_hop(Some(vec![4]), 1, &[5]).unwrap(), Vec::<usize>::new());
        assert!(k_per_hop(Some(vec![4, 2, 1]), 2, &[5]).is_err());
    }
}
