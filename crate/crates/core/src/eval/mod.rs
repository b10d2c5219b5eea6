//! Recall metrics, dataset evaluation and dev-set selection sweeps.

mod metrics;
mod report;
mod select;

pub use metrics::{answer_rank, answer_recall_at_k, gold_ranks, recall_at_k, AnswerOutcome};
pub use report::{
    aggregate, evaluate, question_result, report_from_runs, Aggregates, CostSummary, EvalCounts, EvalOptions,
    EvalReport, Evaluation, MetricAtK, QuestionResult, REPORT_SCHEMA_VERSION,
};
pub use select::{select_best_instruction, sweep_temperature, InstructionSearch, SweepResult, DEFAULT_DEV_SIZE};
