mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{InputArgs, RetrievalArgs};

#[derive(Parser)]
#[command(name = "hoprank", version, about = "Multi-hop path retrieval with language-model reranking")]
struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and save the TF-IDF and BM25 indexes of a corpus.
    BuildIndex {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrieve documents for one question or a file of questions.
    Retrieve {
        /// A question, or a file with one question per line (plain text or
        /// JSON objects with `id` and `question`).
        question: String,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        /// Ranker name: pathrank, tfidf or tfidf-bm25.
        #[arg(long)]
        ranker: Option<String>,
        /// Rows printed per question.
        #[arg(long, default_value_t = 5)]
        show: usize,
        #[arg(long, default_value = "run.jsonl")]
        out: PathBuf,
    },
    /// Evaluate a ranker on a labeled dataset.
    Eval {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        ranker: Option<String>,
        /// Evaluate only the first N questions.
        #[arg(long)]
        limit: Option<usize>,
        /// Leave comparison questions out of answer recall.
        #[arg(long)]
        ar_exclude_comparison: bool,
        #[arg(long, default_value_t = 0.05)]
        max_failure_rate: f64,
        /// Report JSON; runs and a CSV summary are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate instructions with the backend and rank them by dev R@2.
    SearchInstructions {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Instructions to request.
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 40)]
        top_k: u32,
        #[arg(long, default_value_t = hoprank_core::eval::DEFAULT_DEV_SIZE)]
        dev_size: usize,
        /// Ranked instruction JSONL.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate dev R@2 over a temperature grid.
    SweepTemperature {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1.0,1.2,1.4,1.6,1.8,2.0")]
        grid: Vec<f64>,
        #[arg(long, default_value_t = hoprank_core::eval::DEFAULT_DEV_SIZE)]
        dev_size: usize,
        /// CSV table of temperature and R@2.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the deterministic mock scorer over HTTP.
    ServeMock {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
