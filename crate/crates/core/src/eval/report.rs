//! Dataset-level evaluation and the report file.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{answer_rank, gold_ranks, AnswerOutcome};
use crate::corpus::{CorpusGraph, QaExample, QuestionType};
use crate::error::{Error, Result};
use crate::pathrank::{RetrievalOutput, RunRecord};
use crate::registry::Ranker;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    /// Also drop comparison questions from answer recall, not only
    /// yes/no answers.
    pub ar_exclude_comparison: bool,
    /// Question-level worker threads; 0 uses the global pool.
    #[serde(skip)]
    pub workers: usize,
    pub seed: u64,
    pub max_failure_rate: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ks: vec![2, 10, 20],
            ar_exclude_comparison: false,
            workers: 0,
            seed: 0,
            max_failure_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub qid: String,
    /// 1-based rank of each gold title, `None` when not retrieved.
    pub gold_ranks: Vec<Option<usize>>,
    pub answer_rank: Option<usize>,
    /// Whether the question counts toward answer recall.
    pub answer_evaluated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl QuestionResult {
    pub fn recall_at(&self, k: usize) -> u8 {
        u8::from(self.gold_ranks.iter().all(|r| matches!(r, Some(r) if *r <= k)))
    }

    pub fn answer_recall_at(&self, k: usize) -> Option<u8> {
        self.answer_evaluated
            .then(|| u8::from(matches!(self.answer_rank, Some(r) if r <= k)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAtK {
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub recall: Vec<MetricAtK>,
    /// `None` when no question qualifies for answer recall.
    pub answer_recall: Option<Vec<MetricAtK>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub questions: usize,
    pub evaluated: usize,
    pub failed: usize,
    pub answer_questions: usize,
}

/// Deterministic cost counters; wall-clock time lives in run files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostSummary {
    pub requests: usize,
    pub scored_paths: usize,
    pub truncated_responses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub ranker: String,
    pub config: serde_json::Value,
    pub options: EvalOptions,
    pub seed: u64,
    pub counts: EvalCounts,
    pub aggregates: Aggregates,
    pub cost: CostSummary,
    pub per_question: Vec<QuestionResult>,
}

impl EvalReport {
    pub fn recall(&self, k: usize) -> Option<f64> {
        self.aggregates.recall.iter().find(|m| m.k == k).map(|m| m.value)
    }

    pub fn answer_recall(&self, k: usize) -> Option<f64> {
        self.aggregates
            .answer_recall
            .as_ref()?
            .iter()
            .find(|m| m.k == k)
            .map(|m| m.value)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `metric,k,value` rows for plotting.
    pub fn write_aggregates_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "k", "value"])?;
        for m in &self.aggregates.recall {
            w.write_record(["R", &m.k.to_string(), &m.value.to_string()])?;
        }
        for m in self.aggregates.answer_recall.iter().flatten() {
            w.write_record(["AR", &m.k.to_string(), &m.value.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub struct Evaluation {
    pub report: EvalReport,
    pub runs: Vec<RunRecord>,
}

fn counts_for_answer(ex: &QaExample, opts: &EvalOptions) -> bool {
    !(opts.ar_exclude_comparison && ex.qtype == QuestionType::Comparison)
}

pub fn question_result<S: AsRef<str>>(
    ex: &QaExample,
    ranked: &[S],
    graph: &CorpusGraph,
    opts: &EvalOptions,
) -> Result<QuestionResult> {
    let outcome = if counts_for_answer(ex, opts) {
        answer_rank(ranked, &ex.answer, ex.answer_kind, graph)?
    } else {
        AnswerOutcome::Skipped
    };
    Ok(QuestionResult {
        qid: ex.id.clone(),
        gold_ranks: gold_ranks(ranked, &ex.gold_titles),
        answer_rank: match outcome {
            AnswerOutcome::Found(r) => Some(r),
            _ => None,
        },
        answer_evaluated: outcome != AnswerOutcome::Skipped,
        error: None,
    })
}

fn failed_result(ex: &QaExample, message: String) -> QuestionResult {
    QuestionResult {
        qid: ex.id.clone(),
        gold_ranks: Vec::new(),
        answer_rank: None,
        answer_evaluated: false,
        error: Some(message),
    }
}

/// Means of the per-question indicators over successful questions.
pub fn aggregate(results: &[QuestionResult], ks: &[usize]) -> (Aggregates, EvalCounts) {
    let ok: Vec<&QuestionResult> = results.iter().filter(|r| r.error.is_none()).collect();
    let answered: Vec<&QuestionResult> = ok.iter().copied().filter(|r| r.answer_evaluated).collect();
    let mean = |hits: usize, n: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    let recall = ks
        .iter()
        .map(|&k| MetricAtK {
            k,
            value: mean(ok.iter().filter(|r| r.recall_at(k) == 1).count(), ok.len()),
        })
        .collect();
    let answer_recall = (!answered.is_empty()).then(|| {
        ks.iter()
            .map(|&k| MetricAtK {
                k,
                value: mean(
                    answered.iter().filter(|r| r.answer_recall_at(k) == Some(1)).count(),
                    answered.len(),
                ),
            })
            .collect()
    });
    let counts = EvalCounts {
        questions: results.len(),
        evaluated: ok.len(),
        failed: results.len() - ok.len(),
        answer_questions: answered.len(),
    };
    (Aggregates { recall, answer_recall }, counts)
}

fn check_failures(counts: &EvalCounts, opts: &EvalOptions) -> Result<()> {
    if counts.questions > 0 && counts.failed as f64 / counts.questions as f64 > opts.max_failure_rate {
        return Err(Error::TooManyFailures {
            failed: counts.failed,
            total: counts.questions,
        });
    }
    Ok(())
}

/// Runs `ranker` over every question and scores the rankings. Questions
/// whose retrieval fails are recorded and excluded; more than
/// `max_failure_rate` failures is an error.
pub fn evaluate(
    dataset: &[QaExample],
    ranker: &dyn Ranker,
    graph: &CorpusGraph,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("evaluation dataset is empty".into()));
    }
    let run_all = || -> Vec<Result<RetrievalOutput>> {
        dataset
            .par_iter()
            .map(|ex| ranker.rank(&ex.id, &ex.question))
            .collect()
    };
    let outputs = if opts.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?
            .install(run_all)
    } else {
        run_all()
    };

    let mut results = Vec::with_capacity(dataset.len());
    let mut runs = Vec::with_capacity(dataset.len());
    let mut cost = CostSummary::default();
    for (ex, out) in dataset.iter().zip(outputs) {
        match out {
            Ok(out) => {
                cost.requests += out.stats.requests.iter().sum::<usize>();
                cost.scored_paths += out.stats.scored_paths.iter().sum::<usize>();
                cost.truncated_responses += out.stats.truncated_responses;
                results.push(question_result(ex, &out.doc_titles(), graph, opts)?);
                runs.push(RunRecord::from(&out));
            }
            Err(e) => {
                log::warn!("question {} failed: {e}", ex.id);
                results.push(failed_result(ex, e.to_string()));
            }
        }
    }
    let (aggregates, counts) = aggregate(&results, &opts.ks);
    check_failures(&counts, opts)?;
    Ok(Evaluation {
        report: EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            ranker: ranker.name().to_string(),
            config: ranker.config_snapshot(),
            options: opts.clone(),
            seed: opts.seed,
            counts,
            aggregates,
            cost,
            per_question: results,
        },
        runs,
    })
}

/// Rebuilds a report from stored run records. Questions without a record
/// count as failures.
pub fn report_from_runs(
    dataset: &[QaExample],
    runs: &[RunRecord],
    graph: &CorpusGraph,
    ranker: &str,
    config: serde_json::Value,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let by_qid: HashMap<&str, &RunRecord> = runs.iter().map(|r| (r.qid.as_str(), r)).collect();
    let mut results = Vec::with_capacity(dataset.len());
    for ex in dataset {
        match by_qid.get(ex.id.as_str()) {
            Some(run) => results.push(question_result(ex, &run.doc_titles(), graph, opts)?),
            None => results.push(failed_result(ex, "no run record".into())),
        }
    }
    let (aggregates, counts) = aggregate(&results, &opts.ks);
    check_failures(&counts, opts)?;
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        ranker: ranker.to_string(),
        config,
        options: opts.clone(),
        seed: opts.seed,
        counts,
        aggregates,
        cost: CostSummary::default(),
        per_question: results,
    })
}
