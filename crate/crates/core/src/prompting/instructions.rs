//! Instructions: the fixed task description placed before or after the
//! document path, and their generation by span infilling.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::{FillRequest, ScorerBackend, FILL_X, FILL_Y};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionPosition {
    BeforePath,
    #[default]
    AfterPath,
}

impl std::str::FromStr for InstructionPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "before_path" | "before" => Ok(Self::BeforePath),
            "after_path" | "after" => Ok(Self::AfterPath),
            other => Err(Error::InvalidArgument(format!("unknown instruction position {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    pub position: InstructionPosition,
}

impl Instruction {
    pub fn new(text: impl Into<String>, position: InstructionPosition) -> Self {
        Self {
            text: text.into(),
            position,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::InvalidArgument("instruction text is empty".into()));
        }
        if self.text.contains(FILL_X) || self.text.contains(FILL_Y) {
            return Err(Error::InvalidArgument(format!(
                "instruction {:?} contains a placeholder marker",
                self.text
            )));
        }
        Ok(())
    }
}

/// Template filled when the instruction precedes the documents.
pub const BEFORE_PATH_TEMPLATE: &str = "Task: <X> documents <Y> question based on them. Question:";
/// Template filled when the instruction follows the documents.
pub const AFTER_PATH_TEMPLATE: &str = "Task: <X> previous documents and <Y> question based on them. Question:";

/// Number of leading [`builtin_instructions`] used for ensembling by default.
pub const DEFAULT_ENSEMBLE_SIZE: usize = 5;

/// Reference instruction set, strongest first.
pub fn builtin_instructions() -> Vec<Instruction> {
    use InstructionPosition::{AfterPath, BeforePath};
    [
        ("Review previous documents and ask some question.", AfterPath),
        ("Review the previous documents and answer question.", AfterPath),
        ("Read the previous documents and write the following question.", AfterPath),
        ("Search previous documents and ask the question.", AfterPath),
        ("To analyze the documents and ask question.", BeforePath),
        ("To read the previous documents and write a question.", AfterPath),
        ("Read previous documents and write your exam question.", AfterPath),
        ("Read the previous documents and ask this question.", AfterPath),
        ("Read two documents and answer a question.", BeforePath),
        ("Identify all documents and ask question.", BeforePath),
    ]
    .into_iter()
    .map(|(t, p)| Instruction::new(t, p))
    .collect()
}

fn instruction_from_fill(x: &str, y: &str, position: InstructionPosition) -> String {
    let (x, y) = (x.trim(), y.trim());
    match position {
        InstructionPosition::BeforePath => format!("Task: {x} documents {y} question."),
        InstructionPosition::AfterPath => format!("Task: {x} previous documents and {y} question."),
    }
}

/// Requests `n` fills split across the two templates (after-path gets the
/// extra one when `n` is odd), converts them to instructions without the
/// trailing "based on them" phrase, and drops duplicates and empties.
pub fn generate_instruction_candidates(
    backend: &dyn ScorerBackend,
    n: usize,
    top_k: u32,
) -> Result<Vec<Instruction>> {
    let after = n - n / 2;
    let before = n / 2;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (position, template, count) in [
        (InstructionPosition::BeforePath, BEFORE_PATH_TEMPLATE, before),
        (InstructionPosition::AfterPath, AFTER_PATH_TEMPLATE, after),
    ] {
        if count == 0 {
            continue;
        }
        let request = FillRequest {
            template: template.to_string(),
            num_samples: count as u32,
            top_k,
        };
        let response = backend.fill(&request)?;
        for fill in response.fills {
            if fill.x.trim().is_empty() && fill.y.trim().is_empty() {
                continue;
            }
            let inst = Instruction::new(instruction_from_fill(&fill.x, &fill.y, position), position);
            if inst.validate().is_ok() && seen.insert(inst.text.clone()) {
                out.push(inst);
            }
        }
    }
    Ok(out)
}

/// Line format of instruction files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub text: String,
    pub position: InstructionPosition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev_r2: Option<f64>,
}

pub fn load_instructions(path: impl AsRef<Path>) -> Result<Vec<InstructionRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstructionRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        Instruction::new(rec.text.clone(), rec.position)
            .validate()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_instructions(path: impl AsRef<Path>, records: &[InstructionRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl From<&InstructionRecord> for Instruction {
    fn from(r: &InstructionRecord) -> Self {
        Instruction::new(r.text.clone(), r.position)
    }
}
