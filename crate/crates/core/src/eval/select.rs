//! Dev-set selection of the temperature and the instruction by R@2.

use serde::{Deserialize, Serialize};

use super::report::{evaluate, EvalOptions};
use crate::corpus::QaExample;
use crate::error::{Error, Result};
use crate::prompting::Instruction;
use crate::registry::{RankerContext, RankerRegistry};

/// Default dev-split size for selection runs.
pub const DEFAULT_DEV_SIZE: usize = 128;

const SELECTION_K: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// (temperature, R@2) in grid order.
    pub grid: Vec<(f64, f64)>,
    pub selected: f64,
}

fn dev_recall(dev: &[QaExample], ctx: &RankerContext, opts: &EvalOptions) -> Result<f64> {
    let ranker = RankerRegistry::default().build("pathrank", ctx)?;
    let opts = EvalOptions {
        ks: vec![SELECTION_K],
        ..opts.clone()
    };
    let eval = evaluate(dev, ranker.as_ref(), &ctx.graph, &opts)?;
    Ok(eval.report.recall(SELECTION_K).unwrap_or(0.0))
}

/// Evaluates R@2 for each temperature and selects the best, preferring the
/// smaller temperature on ties.
pub fn sweep_temperature(
    dev: &[QaExample],
    grid: &[f64],
    ctx: &RankerContext,
    opts: &EvalOptions,
) -> Result<SweepResult> {
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("temperature grid must be non-empty and positive".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        let mut c = ctx.clone();
        c.config.temperature = t;
        rows.push((t, dev_recall(dev, &c, opts)?));
    }
    let selected = rows
        .iter()
        .copied()
        .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)))
        .map(|(t, _)| t)
        .expect("grid is non-empty");
    Ok(SweepResult { grid: rows, selected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionSearch {
    /// Candidates with their dev R@2, best first.
    pub ranked: Vec<(Instruction, f64)>,
}

impl InstructionSearch {
    pub fn best(&self) -> (&Instruction, f64) {
        let (i, s) = &self.ranked[0];
        (i, *s)
    }
}

/// Runs retrieval with each candidate as the only instruction and ranks
/// candidates by dev R@2, ties broken by ascending instruction text.
pub fn select_best_instruction(
    candidates: &[Instruction],
    dev: &[QaExample],
    ctx: &RankerContext,
    opts: &EvalOptions,
) -> Result<InstructionSearch> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no instruction candidates".into()));
    }
    let mut ranked = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let mut c = ctx.clone();
        c.config.instructions = vec![cand.clone()];
        ranked.push((cand.clone(), dev_recall(dev, &c, opts)?));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.text.cmp(&b.0.text)));
    Ok(InstructionSearch { ranked })
}
