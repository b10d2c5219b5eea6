use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{CostStats, Path, RetrievalConfig, RetrievalOutput, ScoredPath};
use crate::corpus::{CorpusGraph, Document};
use crate::error::{Error, Result};
use crate::prompting::{build_demo_groups, ensemble, render_icl_context, render_prompt, Demonstration, Instruction};
use crate::scorer::{ScoreRequest, ScoreResponse, ScorerBackend};
use crate::sparse::{rank_desc_by_title, SparseIndexes, TfIdfIndex};

/// Descending log-probability, then ascending title sequence.
pub fn sort_scored_paths(paths: &mut [ScoredPath]) {
    paths.sort_by(|a, b| b.logprob.total_cmp(&a.logprob).then_with(|| a.path.cmp(&b.path)));
}

/// Extends `path` through the out-links of its last document, skipping
/// titles already on the path and keeping the `l` links most TF-IDF-similar
/// to the question.
pub fn expand_path(path: &Path, graph: &CorpusGraph, tfidf: &TfIdfIndex, question: &str, l: usize) -> Result<Vec<Path>> {
    let mut links: Vec<(String, f64)> = graph
        .neighbors(path.last())?
        .into_iter()
        .filter(|d| !path.contains(&d.title))
        .map(|d| Ok((d.title.clone(), tfidf.similarity(question, &d.title)?)))
        .collect::<Result<_>>()?;
    rank_desc_by_title(&mut links);
    Ok(links.into_iter().take(l).map(|(t, _)| path.extended(&t)).collect())
}

/// Maximum score of every title over all paths containing it.
pub fn aggregate_doc_scores(scored: &[ScoredPath]) -> Vec<(String, f64)> {
    let mut best: HashMap<&str, f64> = HashMap::new();
    for sp in scored {
        for t in sp.path.titles() {
            best.entry(t.as_str())
                .and_modify(|s| *s = s.max(sp.logprob))
                .or_insert(sp.logprob);
        }
    }
    let mut docs: Vec<(String, f64)> = best.into_iter().map(|(t, s)| (t.to_string(), s)).collect();
    rank_desc_by_title(&mut docs);
    docs
}

pub(crate) struct ScoringOutcome {
    pub scored: Vec<ScoredPath>,
    pub requests: usize,
    pub truncated: usize,
}

/// Scores each path under every (demonstration group, instruction)
/// combination and ensembles: instructions first, then demonstration groups.
/// Requests from all paths are batched together and batches run
/// concurrently; results are reassembled in request order.
pub fn score_paths(
    question: &str,
    paths: &[Path],
    graph: &CorpusGraph,
    backend: &dyn ScorerBackend,
    config: &RetrievalConfig,
) -> Result<Vec<ScoredPath>> {
    score_paths_counted(question, paths, graph, backend, config).map(|o| o.scored)
}

pub(crate) fn score_paths_counted(
    question: &str,
    paths: &[Path],
    graph: &CorpusGraph,
    backend: &dyn ScorerBackend,
    config: &RetrievalConfig,
) -> Result<ScoringOutcome> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no paths to score".into()));
    }
    let mut groups: Vec<Vec<Demonstration>> = build_demo_groups(&config.demos, config.demo_group_size)?;
    if groups.is_empty() {
        groups.push(Vec::new());
    }
    let instructions: Vec<Option<&Instruction>> = if config.instructions.is_empty() {
        vec![None]
    } else {
        config.instructions.iter().map(Some).collect()
    };
    let per_path = groups.len() * instructions.len();

    let mut requests = Vec::with_capacity(paths.len() * per_path);
    for path in paths {
        let docs: Vec<&Document> = path
            .titles()
            .iter()
            .map(|t| graph.require(t))
            .collect::<Result<_>>()?;
        for group in &groups {
            for inst in &instructions {
                let prompt = if group.is_empty() {
                    render_prompt(&docs, *inst, &config.prompt)?
                } else {
                    render_icl_context(group, &docs, *inst, &config.prompt)?
                };
                requests.push(ScoreRequest {
                    context: prompt.text,
                    continuation: question.to_string(),
                    temperature: config.temperature,
                });
            }
        }
    }

    let batches: Vec<Result<Vec<ScoreResponse>>> = requests
        .par_chunks(config.batch_size)
        .enumerate()
        .map(|(b, chunk)| {
            backend.score(chunk).map_err(|source| {
                let first = b * config.batch_size / per_path;
                let last = ((b * config.batch_size + chunk.len() - 1) / per_path).min(paths.len() - 1);
                let names: Vec<String> = paths[first..=last].iter().map(Path::to_string).collect();
                Error::PathScoring {
                    path: names.join("; "),
                    source,
                }
            })
        })
        .collect();
    let mut responses = Vec::with_capacity(requests.len());
    for batch in batches {
        responses.extend(batch?);
    }
    if responses.len() != requests.len() {
        return Err(Error::Scorer(crate::error::ScorerError::CountMismatch {
            expected: requests.len(),
            got: responses.len(),
        }));
    }
    let truncated = responses.iter().filter(|r| r.truncated).count();

    let mut scored = Vec::with_capacity(paths.len());
    for (pi, path) in paths.iter().enumerate() {
        let block = &responses[pi * per_path..(pi + 1) * per_path];
        let value = |r: &ScoreResponse| {
            if config.length_normalize {
                r.logprob / f64::from(r.num_tokens.max(1))
            } else {
                r.logprob
            }
        };
        let matrix: Vec<Vec<f64>> = block
            .chunks(instructions.len())
            .map(|row| row.iter().map(value).collect())
            .collect();
        let per_group: Vec<f64> = matrix
            .iter()
            .map(|row| ensemble(row, config.instruction_ensemble_mode))
            .collect::<Result<_>>()?;
        let logprob = ensemble(&per_group, config.demo_ensemble_mode)?;
        let per_instruction = (groups.len() == 1 && !config.instructions.is_empty())
            .then(|| matrix[0].iter().copied().enumerate().collect());
        let per_demo_group = (groups.len() > 1).then(|| per_group.iter().copied().enumerate().collect());
        scored.push(ScoredPath {
            path: path.clone(),
            logprob,
            per_instruction,
            per_demo_group,
        });
    }
    Ok(ScoringOutcome {
        scored,
        requests: requests.len(),
        truncated,
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Full retrieval for one question. All scored paths of every length are
/// merged into the final ranking.
pub fn retrieve(
    qid: &str,
    question: &str,
    graph: &CorpusGraph,
    tfidf: &TfIdfIndex,
    backend: &dyn ScorerBackend,
    config: &RetrievalConfig,
) -> Result<RetrievalOutput> {
    config.validate()?;
    let mut out = RetrievalOutput::empty(qid);
    let mut timing = BTreeMap::new();
    let mut stats = CostStats::default();

    let t = Instant::now();
    let seeds = tfidf.retrieve(question, config.f);
    timing.insert("seed".to_string(), elapsed_ms(t));
    if seeds.is_empty() {
        out.warnings.push("TF-IDF returned no seed documents".into());
        out.timing_ms = timing;
        return Ok(out);
    }

    let mut frontier: Vec<Path> = seeds.into_iter().map(|(t, _)| Path::single(t)).collect();
    let mut all_scored: Vec<ScoredPath> = Vec::new();
    let mut doc_cache: HashMap<String, f64> = HashMap::new();
    let mut hop = 1;
    loop {
        let t = Instant::now();
        let mut scored = if config.single_hop_mode {
            score_independently(question, &frontier, graph, backend, config, &mut doc_cache, &mut stats)?
        } else {
            let outcome = score_paths_counted(question, &frontier, graph, backend, config)?;
            stats.requests.push(outcome.requests);
            stats.truncated_responses += outcome.truncated;
            outcome.scored
        };
        stats.scored_paths.push(scored.len());
        timing.insert(format!("hop{hop}_score"), elapsed_ms(t));
        all_scored.extend(scored.iter().cloned());
        if hop >= config.h {
            break;
        }

        let t = Instant::now();
        sort_scored_paths(&mut scored);
        let keep = config.k_per_hop[hop - 1].min(scored.len());
        let mut next = Vec::new();
        for sp in &scored[..keep] {
            next.extend(expand_path(&sp.path, graph, tfidf, question, config.l)?);
        }
        timing.insert(format!("hop{}_expand", hop + 1), elapsed_ms(t));
        if next.is_empty() {
            break;
        }
        frontier = next;
        hop += 1;
    }
    if stats.truncated_responses > 0 {
        out.warnings.push(format!(
            "backend truncated {} prompts",
            stats.truncated_responses
        ));
    }

    let t = Instant::now();
    sort_scored_paths(&mut all_scored);
    out.ranked_docs = aggregate_doc_scores(&all_scored);
    out.ranked_paths = all_scored;
    timing.insert("aggregate".to_string(), elapsed_ms(t));
    out.timing_ms = timing;
    out.stats = stats;
    Ok(out)
}

/// Single-document scoring: each new document on the frontier is scored on
/// its own, and a path scores the sum of its documents' scores.
fn score_independently(
    question: &str,
    frontier: &[Path],
    graph: &CorpusGraph,
    backend: &dyn ScorerBackend,
    config: &RetrievalConfig,
    cache: &mut HashMap<String, f64>,
    stats: &mut CostStats,
) -> Result<Vec<ScoredPath>> {
    let mut pending: Vec<Path> = Vec::new();
    for path in frontier {
        for t in path.titles() {
            if !cache.contains_key(t) && !pending.iter().any(|p| p.last() == t) {
                pending.push(Path::single(t.clone()));
            }
        }
    }
    if pending.is_empty() {
        stats.requests.push(0);
    } else {
        let outcome = score_paths_counted(question, &pending, graph, backend, config)?;
        stats.requests.push(outcome.requests);
        stats.truncated_responses += outcome.truncated;
        for sp in outcome.scored {
            cache.insert(sp.path.last().to_string(), sp.logprob);
        }
    }
    Ok(frontier
        .iter()
        .map(|p| ScoredPath {
            path: p.clone(),
            logprob: p.titles().iter().map(|t| cache[t]).sum(),
            per_instruction: None,
            per_demo_group: None,
        })
        .collect())
}

/// Retrieval engine bound to shared, read-only resources.
#[derive(Clone)]
pub struct PathRetriever {
    pub graph: Arc<CorpusGraph>,
    pub indexes: Arc<SparseIndexes>,
    pub backend: Arc<dyn ScorerBackend>,
    pub config: RetrievalConfig,
}

impl PathRetriever {
    pub fn retrieve(&self, qid: &str, question: &str) -> Result<RetrievalOutput> {
        retrieve(qid, question, &self.graph, &self.indexes.tfidf, self.backend.as_ref(), &self.config)
    }
}
