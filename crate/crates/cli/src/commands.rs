use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use hoprank_core::corpus::{load_corpus, load_qa_dataset, QaExample};
use hoprank_core::eval::{evaluate, select_best_instruction, sweep_temperature, EvalOptions};
use hoprank_core::manifest::RunManifest;
use hoprank_core::pathrank::{write_run_file, RetrievalOutput, RunRecord};
use hoprank_core::prompting::{generate_instruction_candidates, save_instructions, InstructionRecord};
use hoprank_core::registry::{BackendOptions, BackendRegistry, RankerContext, RankerRegistry};
use hoprank_core::scorer::{MockBackend, ReferenceServer};
use hoprank_core::sparse::{Bm25Params, SparseIndexes};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{attach_prompt_material, resolve, FileConfig, InputArgs, Resolved, RetrievalArgs};
use crate::{Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::BuildIndex { corpus, out } => build_index(&file, corpus, &out),
        Command::Retrieve {
            question,
            input,
            retrieval,
            ranker,
            show,
            out,
        } => {
            let ranker = ranker.or_else(|| file.ranker.clone()).unwrap_or_else(|| "pathrank".into());
            retrieve(&file, &input, &retrieval, &ranker, &question, show, &out)
        }
        Command::Eval {
            input,
            retrieval,
            dataset,
            ranker,
            limit,
            ar_exclude_comparison,
            max_failure_rate,
            out,
        } => {
            let ranker = ranker.or_else(|| file.ranker.clone()).unwrap_or_else(|| "pathrank".into());
            let dataset = dataset_path(dataset, &file)?;
            let opts = EvalOptions {
                ar_exclude_comparison,
                max_failure_rate,
                ..EvalOptions::default()
            };
            eval(&file, &input, &retrieval, &ranker, &dataset, limit, opts, &out)
        }
        Command::SearchInstructions {
            input,
            retrieval,
            dataset,
            n,
            top_k,
            dev_size,
            out,
        } => {
            let dataset = dataset_path(dataset, &file)?;
            search_instructions(&file, &input, &retrieval, &dataset, n, top_k, dev_size, &out)
        }
        Command::SweepTemperature {
            input,
            retrieval,
            dataset,
            grid,
            dev_size,
            out,
        } => {
            let dataset = dataset_path(dataset, &file)?;
            sweep(&file, &input, &retrieval, &dataset, &grid, dev_size, &out)
        }
        Command::ServeMock { addr } => {
            let server = ReferenceServer::start(&addr, Arc::new(MockBackend::new()))
                .with_context(|| format!("cannot bind {addr}"))?;
            println!("mock scorer listening on {}", server.url());
            server.join();
            Ok(())
        }
    }
}

fn dataset_path(flag: Option<PathBuf>, file: &FileConfig) -> Result<PathBuf> {
    flag.or_else(|| file.dataset.clone())
        .context("no dataset given; pass --dataset or set it in the config file")
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes the manifest for `out` before any output exists.
fn begin(command: &str, config: serde_json::Value, inputs: &[PathBuf], seed: u64, out: &Path) -> Result<RunManifest> {
    let manifest = RunManifest::new(command, config, inputs, seed)?;
    manifest.write(manifest_path(out))?;
    Ok(manifest)
}

fn finish(mut manifest: RunManifest, out: &Path) -> Result<()> {
    manifest.mark_finished();
    manifest.write(manifest_path(out))?;
    Ok(())
}

fn build_index(file: &FileConfig, corpus: Option<PathBuf>, out: &Path) -> Result<()> {
    let corpus = corpus
        .or_else(|| file.corpus.clone())
        .context("no corpus given; pass --corpus or set it in the config file")?;
    let params = Bm25Params::default();
    let manifest = begin(
        "build-index",
        json!({ "corpus": corpus, "bm25": { "k1": params.k1, "b": params.b } }),
        std::slice::from_ref(&corpus),
        0,
        out,
    )?;
    let graph = load_corpus(&corpus)?;
    if graph.dangling_link_count() > 0 {
        log::warn!("dropped {} links to titles outside the corpus", graph.dangling_link_count());
    }
    let indexes = SparseIndexes::build(&graph, params)?;
    indexes.save(out)?;
    log::info!(
        "indexed {} documents, {} terms -> {}",
        graph.doc_count(),
        indexes.tfidf.vocabulary_size(),
        out.display()
    );
    finish(manifest, out)
}

struct Loaded {
    resolved: Resolved,
    ctx: RankerContext,
}

fn load(file: &FileConfig, input: &InputArgs, args: &RetrievalArgs, ranker: &str) -> Result<Loaded> {
    let mut resolved = resolve(file, input, args)?;
    let graph = load_corpus(&resolved.corpus)?;
    attach_prompt_material(&mut resolved, &graph, file, args)?;
    let indexes = match &resolved.index {
        Some(p) => SparseIndexes::load(p)?,
        None => {
            log::info!("no --index given; building indexes in memory");
            SparseIndexes::build(&graph, Bm25Params::default())?
        }
    };
    if indexes.tfidf.doc_count() != graph.doc_count() {
        bail!(
            "index covers {} documents but the corpus has {}; rebuild it",
            indexes.tfidf.doc_count(),
            graph.doc_count()
        );
    }
    let backend = if ranker == "pathrank" {
        Some(BackendRegistry::default().resolve(&resolved.backend, &BackendOptions::default())?)
    } else {
        None
    };
    let ctx = RankerContext {
        graph: Arc::new(graph),
        indexes: Arc::new(indexes),
        backend,
        config: resolved.retrieval.clone(),
    };
    Ok(Loaded { resolved, ctx })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("cannot start worker pool")
}

fn read_questions(arg: &str) -> Result<(Vec<(String, String)>, Option<PathBuf>)> {
    let path = Path::new(arg);
    if !path.is_file() {
        return Ok((vec![("q1".to_string(), arg.to_string())], None));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('{') {
            let v: serde_json::Value =
                serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
            let q = v["question"]
                .as_str()
                .with_context(|| format!("{}:{}: missing \"question\"", path.display(), i + 1))?;
            let id = v["id"].as_str().map_or_else(|| format!("q{}", out.len() + 1), str::to_string);
            out.push((id, q.to_string()));
        } else {
            out.push((format!("q{}", out.len() + 1), line.to_string()));
        }
    }
    if out.is_empty() {
        bail!("{} contains no questions", path.display());
    }
    Ok((out, Some(path.to_path_buf())))
}

fn print_table(out: &RetrievalOutput, question: &str, show: usize) {
    println!("{}  {}", out.qid, question);
    println!("  {:>4}  {:>12}  document", "rank", "score");
    for (i, (t, s)) in out.ranked_docs.iter().take(show).enumerate() {
        println!("  {:>4}  {:>12.4}  {}", i + 1, s, t);
    }
    if out.ranked_paths.iter().any(|p| p.path.hop() > 1) {
        println!("  {:>4}  {:>12}  path", "rank", "score");
        for (i, p) in out.ranked_paths.iter().take(show).enumerate() {
            println!("  {:>4}  {:>12.4}  {}", i + 1, p.logprob, p.path);
        }
    }
    for w in &out.warnings {
        println!("  warning: {w}");
    }
}

fn retrieve(
    file: &FileConfig,
    input: &InputArgs,
    args: &RetrievalArgs,
    ranker_name: &str,
    question: &str,
    show: usize,
    out: &Path,
) -> Result<()> {
    let (questions, question_file) = read_questions(question)?;
    let Loaded { resolved, ctx } = load(file, input, args, ranker_name)?;
    let mut inputs = resolved.inputs();
    inputs.extend(question_file);
    let manifest = begin(
        "retrieve",
        json!({ "ranker": ranker_name, "settings": resolved }),
        &inputs,
        resolved.seed,
        out,
    )?;
    let ranker = RankerRegistry::default().build(ranker_name, &ctx)?;
    let run_all = || -> Vec<hoprank_core::Result<RetrievalOutput>> {
        questions.par_iter().map(|(id, q)| ranker.rank(id, q)).collect()
    };
    let results = if resolved.workers > 0 {
        pool(resolved.workers)?.install(run_all)
    } else {
        run_all()
    };
    let mut records = Vec::with_capacity(results.len());
    for ((_, q), r) in questions.iter().zip(results) {
        let r = r?;
        print_table(&r, q, show);
        records.push(RunRecord::from(&r));
    }
    let w = File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut w = BufWriter::new(w);
    write_run_file(&mut w, &records)?;
    w.flush()?;
    finish(manifest, out)
}

fn load_dataset(path: &Path, limit: Option<usize>) -> Result<Vec<QaExample>> {
    let mut qa = load_qa_dataset(path)?;
    if let Some(n) = limit {
        qa.truncate(n);
    }
    if qa.is_empty() {
        bail!("{} contains no questions", path.display());
    }
    Ok(qa)
}

#[allow(clippy::too_many_arguments)]
fn eval(
    file: &FileConfig,
    input: &InputArgs,
    args: &RetrievalArgs,
    ranker_name: &str,
    dataset: &Path,
    limit: Option<usize>,
    opts: EvalOptions,
    out: &Path,
) -> Result<()> {
    let qa = load_dataset(dataset, limit)?;
    let Loaded { resolved, ctx } = load(file, input, args, ranker_name)?;
    let opts = EvalOptions {
        seed: resolved.seed,
        workers: resolved.workers,
        ..opts
    };
    let mut inputs = resolved.inputs();
    inputs.push(dataset.to_path_buf());
    let manifest = begin(
        "eval",
        json!({ "ranker": ranker_name, "options": opts, "limit": limit, "settings": resolved }),
        &inputs,
        resolved.seed,
        out,
    )?;
    let ranker = RankerRegistry::default().build(ranker_name, &ctx)?;
    let ev = evaluate(&qa, ranker.as_ref(), &ctx.graph, &opts)?;
    std::fs::write(out, ev.report.to_json()?).with_context(|| format!("cannot write {}", out.display()))?;
    let runs = sibling(out, ".runs.jsonl");
    let mut w = BufWriter::new(File::create(&runs).with_context(|| format!("cannot create {}", runs.display()))?);
    write_run_file(&mut w, &ev.runs)?;
    w.flush()?;
    let csv = sibling(out, ".csv");
    ev.report
        .write_aggregates_csv(File::create(&csv).with_context(|| format!("cannot create {}", csv.display()))?)?;

    let c = &ev.report.counts;
    println!("{ranker_name}: {} questions, {} failed", c.questions, c.failed);
    for m in &ev.report.aggregates.recall {
        println!("  R@{:<3} {:.4}", m.k, m.value);
    }
    for m in ev.report.aggregates.answer_recall.iter().flatten() {
        println!("  AR@{:<2} {:.4}", m.k, m.value);
    }
    finish(manifest, out)
}

fn dev_split(dataset: &Path, dev_size: usize) -> Result<Vec<QaExample>> {
    load_dataset(dataset, Some(dev_size))
}

fn dev_recall(ctx: &RankerContext, dev: &[QaExample], opts: &EvalOptions) -> Result<f64> {
    let ranker = RankerRegistry::default().build("pathrank", ctx)?;
    let ev = evaluate(dev, ranker.as_ref(), &ctx.graph, &EvalOptions { ks: vec![2], ..opts.clone() })?;
    Ok(ev.report.recall(2).unwrap_or(0.0))
}

#[allow(clippy::too_many_arguments)]
fn search_instructions(
    file: &FileConfig,
    input: &InputArgs,
    args: &RetrievalArgs,
    dataset: &Path,
    n: usize,
    top_k: u32,
    dev_size: usize,
    out: &Path,
) -> Result<()> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let dev = dev_split(dataset, dev_size)?;
    let Loaded { resolved, ctx } = load(file, input, args, "pathrank")?;
    let opts = EvalOptions {
        seed: resolved.seed,
        workers: resolved.workers,
        ..EvalOptions::default()
    };
    let mut inputs = resolved.inputs();
    inputs.push(dataset.to_path_buf());
    let manifest = begin(
        "search-instructions",
        json!({ "n": n, "top_k": top_k, "dev_size": dev.len(), "settings": resolved }),
        &inputs,
        resolved.seed,
        out,
    )?;
    let backend = ctx.backend.clone().context("instruction search needs a scoring backend")?;
    let candidates = generate_instruction_candidates(backend.as_ref(), n, top_k)?;
    if candidates.is_empty() {
        bail!("the backend produced no usable instructions");
    }
    log::info!("{} distinct candidates from {n} requested", candidates.len());

    let mut baseline_ctx = ctx.clone();
    baseline_ctx.config.instructions.clear();
    let baseline = dev_recall(&baseline_ctx, &dev, &opts)?;
    let search = select_best_instruction(&candidates, &dev, &ctx, &opts)?;
    let records: Vec<InstructionRecord> = search
        .ranked
        .iter()
        .map(|(inst, r2)| InstructionRecord {
            text: inst.text.clone(),
            position: inst.position,
            dev_r2: Some(*r2),
        })
        .collect();
    save_instructions(out, &records)?;

    println!("{:>4}  {:>6}  {:<11}  instruction", "rank", "R@2", "position");
    for (i, r) in records.iter().enumerate() {
        let pos = serde_json::to_value(r.position)?;
        println!("{:>4}  {:>6.4}  {:<11}  {}", i + 1, r.dev_r2.unwrap_or(0.0), pos.as_str().unwrap_or(""), r.text);
    }
    println!("no instruction: R@2 {baseline:.4}");
    finish(manifest, out)
}

fn sweep(
    file: &FileConfig,
    input: &InputArgs,
    args: &RetrievalArgs,
    dataset: &Path,
    grid: &[f64],
    dev_size: usize,
    out: &Path,
) -> Result<()> {
    let dev = dev_split(dataset, dev_size)?;
    let Loaded { resolved, ctx } = load(file, input, args, "pathrank")?;
    let opts = EvalOptions {
        seed: resolved.seed,
        workers: resolved.workers,
        ..EvalOptions::default()
    };
    let mut inputs = resolved.inputs();
    inputs.push(dataset.to_path_buf());
    let manifest = begin(
        "sweep-temperature",
        json!({ "grid": grid, "dev_size": dev.len(), "settings": resolved }),
        &inputs,
        resolved.seed,
        out,
    )?;
    let result = sweep_temperature(&dev, grid, &ctx, &opts)?;
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("cannot create {}", out.display()))?);
    writeln!(w, "temperature,r_at_2")?;
    println!("{:>11}  {:>6}", "temperature", "R@2");
    for (t, r) in &result.grid {
        writeln!(w, "{t:?},{r}")?;
        println!("{:>11}  {r:>6.4}", format!("{t:?}"));
    }
    w.flush()?;
    println!("selected temperature: {:?}", result.selected);
    finish(manifest, out)
}
