//! Rendering of document paths into scoring prompts.
//!
//! Layout of a single path prompt, one element per line:
//!
//! ```text
//! [instruction]            (before_path)
//! Document: <title>. <text>
//! Document: <title>. <text>
//! [instruction]            (after_path)
//! Question:
//! ```
//!
//! Token accounting counts whitespace-separated tokens. Each document line,
//! header included, is capped at `per_doc_token_limit`; if the whole prompt
//! still exceeds its limit, document text is trimmed from the end of the
//! last rendered document backwards.

use serde::{Deserialize, Serialize};

use super::demos::Demonstration;
use super::instructions::{Instruction, InstructionPosition};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::text::whitespace_token_count;

pub const MAX_DEMOS_PER_CONTEXT: usize = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocOrder {
    #[default]
    LinkOrder,
    Inverted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub doc_prefix: String,
    /// Render "Document 1:", "Document 2:", ... instead of a fixed prefix.
    pub numbered_prefix: bool,
    pub per_doc_token_limit: usize,
    pub prompt_token_limit: usize,
    /// Limit used instead of `prompt_token_limit` when demonstrations are
    /// present.
    pub icl_prompt_token_limit: usize,
    /// Overrides each instruction's own position when set.
    pub instruction_position: Option<InstructionPosition>,
    /// Repeat the instruction inside every demonstration block.
    pub instruction_in_demos: bool,
    pub doc_order: DocOrder,
    pub question_cue: String,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            doc_prefix: "Document:".into(),
            numbered_prefix: false,
            per_doc_token_limit: 230,
            prompt_token_limit: 600,
            icl_prompt_token_limit: 1024,
            instruction_position: None,
            instruction_in_demos: false,
            doc_order: DocOrder::LinkOrder,
            question_cue: "Question:".into(),
        }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.per_doc_token_limit == 0
            || self.per_doc_token_limit > self.prompt_token_limit
            || self.per_doc_token_limit > self.icl_prompt_token_limit
        {
            return Err(Error::InvalidArgument(format!(
                "token limits must satisfy 0 < per_doc ({}) <= prompt ({}) and icl ({})",
                self.per_doc_token_limit, self.prompt_token_limit, self.icl_prompt_token_limit
            )));
        }
        if self.question_cue.trim().is_empty() {
            return Err(Error::InvalidArgument("question cue is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub approx_tokens: usize,
    pub path_titles: Vec<String>,
}

struct DocLine {
    header: String,
    header_tokens: usize,
    tokens: Vec<String>,
}

impl DocLine {
    fn new(header: String, text: &str, per_doc_limit: usize) -> Self {
        let header_tokens = whitespace_token_count(&header);
        let budget = per_doc_limit.saturating_sub(header_tokens);
        let tokens = text.split_whitespace().take(budget).map(str::to_string).collect();
        Self {
            header,
            header_tokens,
            tokens,
        }
    }

    fn token_count(&self) -> usize {
        self.header_tokens + self.tokens.len()
    }

    fn render(&self) -> String {
        if self.tokens.is_empty() {
            self.header.clone()
        } else {
            format!("{} {}", self.header, self.tokens.join(" "))
        }
    }
}

enum Line {
    Fixed(String),
    Doc(DocLine),
}

impl Line {
    fn token_count(&self) -> usize {
        match self {
            Line::Fixed(s) => whitespace_token_count(s),
            Line::Doc(d) => d.token_count(),
        }
    }

    fn render(&self) -> String {
        match self {
            Line::Fixed(s) => s.clone(),
            Line::Doc(d) => d.render(),
        }
    }
}

/// A block of lines; blocks are separated by a blank line.
type Block = Vec<Line>;

fn ordered<'a, T>(items: &'a [T], order: DocOrder) -> Vec<&'a T> {
    match order {
        DocOrder::LinkOrder => items.iter().collect(),
        DocOrder::Inverted => items.iter().rev().collect(),
    }
}

fn path_lines(docs: &[&Document], instruction: Option<&Instruction>, config: &PromptConfig) -> Result<Block> {
    if docs.is_empty() {
        return Err(Error::InvalidArgument("cannot render an empty path".into()));
    }
    let position = instruction.map(|i| config.instruction_position.unwrap_or(i.position));
    let mut lines = Vec::with_capacity(docs.len() + 2);
    if let (Some(inst), Some(InstructionPosition::BeforePath)) = (instruction, position) {
        lines.push(Line::Fixed(inst.text.clone()));
    }
    for (i, doc) in ordered(docs, config.doc_order).into_iter().enumerate() {
        let prefix = if config.numbered_prefix {
            format!("{} {}:", config.doc_prefix.trim_end_matches(':'), i + 1)
        } else {
            config.doc_prefix.clone()
        };
        let header = format!("{} {}.", prefix, doc.title);
        lines.push(Line::Doc(DocLine::new(header, &doc.text, config.per_doc_token_limit)));
    }
    if let (Some(inst), Some(InstructionPosition::AfterPath)) = (instruction, position) {
        lines.push(Line::Fixed(inst.text.clone()));
    }
    Ok(lines)
}

/// Trims document text until the total fits `limit`. `blocks` are trimmed
/// in order; within a block, from the last document line backwards.
fn enforce_budget(blocks: &mut [Block], limit: usize) -> Result<usize> {
    let total: usize = blocks.iter().flatten().map(Line::token_count).sum();
    let mut excess = total.saturating_sub(limit);
    for block in blocks.iter_mut() {
        for line in block.iter_mut().rev() {
            if excess == 0 {
                break;
            }
            if let Line::Doc(doc) = line {
                let cut = excess.min(doc.tokens.len());
                doc.tokens.truncate(doc.tokens.len() - cut);
                excess -= cut;
            }
        }
    }
    if excess > 0 {
        return Err(Error::PromptBudget {
            needed: limit + excess,
            limit,
        });
    }
    Ok(total.min(limit))
}

fn join_blocks(blocks: &[Block]) -> String {
    blocks
        .iter()
        .map(|b| b.iter().map(Line::render).collect::<Vec<_>>().join("\n"))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn validate_instruction(instruction: Option<&Instruction>) -> Result<()> {
    if let Some(inst) = instruction {
        inst.validate()?;
    }
    Ok(())
}

/// Renders the scoring prompt for one path.
pub fn render_prompt(
    path_docs: &[&Document],
    instruction: Option<&Instruction>,
    config: &PromptConfig,
) -> Result<RenderedPrompt> {
    config.validate()?;
    validate_instruction(instruction)?;
    let mut target = path_lines(path_docs, instruction, config)?;
    target.push(Line::Fixed(config.question_cue.clone()));
    let mut blocks = [target];
    let approx_tokens = enforce_budget(&mut blocks, config.prompt_token_limit)?;
    Ok(RenderedPrompt {
        text: join_blocks(&blocks),
        approx_tokens,
        path_titles: path_docs.iter().map(|d| d.title.clone()).collect(),
    })
}

/// Renders demonstrations followed by the target path. Each demonstration is
/// its gold path prompt completed with its question, separated from the next
/// block by a blank line. Over budget, demonstration text is trimmed before
/// target text.
pub fn render_icl_context(
    demos: &[Demonstration],
    path_docs: &[&Document],
    instruction: Option<&Instruction>,
    config: &PromptConfig,
) -> Result<RenderedPrompt> {
    if demos.is_empty() {
        return render_prompt(path_docs, instruction, config);
    }
    config.validate()?;
    validate_instruction(instruction)?;
    if demos.len() > MAX_DEMOS_PER_CONTEXT {
        return Err(Error::InvalidArgument(format!(
            "{} demonstrations in one context, at most {MAX_DEMOS_PER_CONTEXT} fit",
            demos.len()
        )));
    }
    let demo_instruction = if config.instruction_in_demos { instruction } else { None };
    let mut blocks: Vec<Block> = Vec::with_capacity(demos.len() + 1);
    for demo in demos {
        demo.validate()?;
        let docs: Vec<&Document> = demo.path_docs.iter().collect();
        let mut block = path_lines(&docs, demo_instruction, config)?;
        block.push(Line::Fixed(format!("{} {}", config.question_cue, demo.question.trim())));
        blocks.push(block);
    }
    let mut target = path_lines(path_docs, instruction, config)?;
    target.push(Line::Fixed(config.question_cue.clone()));
    blocks.push(target);

    // last demo first, target last
    let n = blocks.len();
    blocks[..n - 1].reverse();
    let approx = enforce_budget(&mut blocks, config.icl_prompt_token_limit);
    blocks[..n - 1].reverse();
    let approx_tokens = approx?;
    Ok(RenderedPrompt {
        text: join_blocks(&blocks),
        approx_tokens,
        path_titles: path_docs.iter().map(|d| d.title.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::QuestionType;
    use proptest::prelude::*;

    fn doc(title: &str, text: &str) -> Document {
        Document {
            id: title.into(),
            title: title.into(),
            text: text.into(),
            links: vec![],
        }
    }

    fn words(prefix: &str, n: usize) -> String {
        (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn no_instruction_layout() {
        let (a, b) = (doc("A", "alpha text"), doc("B", "beta text"));
        let p = render_prompt(&[&a, &b], None, &PromptConfig::default()).unwrap();
        assert_eq!(p.text, "Document: A. alpha text\nDocument: B. beta text\nQuestion:");
        assert_eq!(p.approx_tokens, 9);
        assert_eq!(p.path_titles, vec!["A", "B"]);
    }

    #[test]
    fn inverted_order_only_swaps_documents() {
        let (a, b) = (doc("A", "alpha"), doc("B", "beta"));
        let cfg = PromptConfig {
            doc_order: DocOrder::Inverted,
            ..Default::default()
        };
        let p = render_prompt(&[&a, &b], None, &cfg).unwrap();
        assert_eq!(p.text, "Document: B. beta\nDocument: A. alpha\nQuestion:");
        assert_eq!(p.path_titles, vec!["A", "B"]);
    }

    #[test]
    fn numbered_prefixes() {
        let (a, b) = (doc("A", "alpha"), doc("B", "beta"));
        let cfg = PromptConfig {
            numbered_prefix: true,
            ..Default::default()
        };
        let p = render_prompt(&[&a, &b], None, &cfg).unwrap();
        assert_eq!(p.text, "Document 1: A. alpha\nDocument 2: B. beta\nQuestion:");
    }

    #[test]
    fn config_position_overrides_instruction() {
        let a = doc("A", "alpha");
        let inst = Instruction::new("Do it.", InstructionPosition::AfterPath);
        let cfg = PromptConfig {
            instruction_position: Some(InstructionPosition::BeforePath),
            ..Default::default()
        };
        let p = render_prompt(&[&a], Some(&inst), &cfg).unwrap();
        assert_eq!(p.text, "Do it.\nDocument: A. alpha\nQuestion:");
    }

    #[test]
    fn per_document_cap_includes_header() {
        let a = doc("A", &words("w", 500));
        let p = render_prompt(&[&a], None, &PromptConfig::default()).unwrap();
        let first_line = p.text.lines().next().unwrap();
        assert_eq!(whitespace_token_count(first_line), 230);
        // "Document: A." is two tokens, leaving 228 for text
        assert!(first_line.ends_with(" w227"));
    }

    #[test]
    fn prompt_limit_trims_last_document_first() {
        let docs: Vec<Document> = ["A", "B", "C"].iter().map(|t| doc(t, &words(t, 300))).collect();
        let refs: Vec<&Document> = docs.iter().collect();
        let p = render_prompt(&refs, None, &PromptConfig::default()).unwrap();
        assert_eq!(p.approx_tokens, 600);
        assert_eq!(whitespace_token_count(&p.text), 600);
        let lines: Vec<&str> = p.text.lines().collect();
        assert_eq!(whitespace_token_count(lines[0]), 230);
        assert_eq!(whitespace_token_count(lines[1]), 230);
        // 600 - 460 - 1 (cue) = 139
        assert_eq!(whitespace_token_count(lines[2]), 139);
    }

    #[test]
    fn impossible_budget_is_an_error() {
        let a = doc("A", "x");
        let inst = Instruction::new(words("i", 50), InstructionPosition::AfterPath);
        let cfg = PromptConfig {
            per_doc_token_limit: 10,
            prompt_token_limit: 20,
            ..Default::default()
        };
        assert!(matches!(
            render_prompt(&[&a], Some(&inst), &cfg),
            Err(Error::PromptBudget { .. })
        ));
        assert!(render_prompt(&[], None, &PromptConfig::default()).is_err());
    }

    fn demo(titles: &[&str], question: &str, qtype: QuestionType) -> Demonstration {
        Demonstration {
            path_docs: titles.iter().map(|t| doc(t, &format!("{t} text"))).collect(),
            question: question.into(),
            qtype,
        }
    }

    #[test]
    fn icl_layout_and_degenerate_case() {
        let target = doc("T", "target text");
        let demos = [
            demo(&["D1", "D2"], "Who founded D2?", QuestionType::Bridge),
            demo(&["E1", "E2"], "Which is older?", QuestionType::Comparison),
        ];
        let p = render_icl_context(&demos, &[&target], None, &PromptConfig::default()).unwrap();
        assert_eq!(
            p.text,
            "Document: D1. D1 text\nDocument: D2. D2 text\nQuestion: Who founded D2?\n\n\
             Document: E1. E1 text\nDocument: E2. E2 text\nQuestion: Which is older?\n\n\
             Document: T. target text\nQuestion:"
        );
        let plain = render_prompt(&[&target], None, &PromptConfig::default()).unwrap();
        assert_eq!(render_icl_context(&[], &[&target], None, &PromptConfig::default()).unwrap(), plain);
    }

    #[test]
    fn icl_trims_demos_before_target() {
        let target = doc("T", &words("t", 200));
        let demos = [
            demo(&["D1", "D2"], "q one?", QuestionType::Bridge),
            demo(&["E1", "E2"], "q two?", QuestionType::Comparison),
        ];
        let mut demos = demos;
        for d in demos.iter_mut() {
            for pd in d.path_docs.iter_mut() {
                pd.text = words("x", 300);
            }
        }
        let p = render_icl_context(&demos, &[&target], None, &PromptConfig::default()).unwrap();
        assert_eq!(p.approx_tokens, 1024);
        assert_eq!(whitespace_token_count(&p.text), 1024);
        let last_doc_line = p.text.lines().rev().nth(1).unwrap();
        assert_eq!(whitespace_token_count(last_doc_line), 202);
        assert!(render_icl_context(
            &[demos[0].clone(), demos[1].clone(), demos[0].clone()],
            &[&target],
            None,
            &PromptConfig::default()
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn limits_hold_for_random_paths(
            lens in prop::collection::vec(0usize..700, 1..4),
            per_doc in 5usize..300,
            extra in 0usize..400,
        ) {
            let docs: Vec<Document> = lens.iter().enumerate()
                .map(|(i, &n)| doc(&format!("T{i}"), &words("w", n)))
                .collect();
            let refs: Vec<&Document> = docs.iter().collect();
            let cfg = PromptConfig {
                per_doc_token_limit: per_doc,
                prompt_token_limit: per_doc + extra,
                icl_prompt_token_limit: per_doc + extra,
                ..Default::default()
            };
            match render_prompt(&refs, None, &cfg) {
                Ok(p) => {
                    prop_assert!(p.approx_tokens <= cfg.prompt_token_limit);
                    prop_assert_eq!(p.approx_tokens, whitespace_token_count(&p.text));
                    prop_assert!(p.text.ends_with("Question:"));
                    for line in p.text.lines().filter(|l| l.starts_with("Document:")) {
                        prop_assert!(whitespace_token_count(line) <= per_doc);
                    }
                }
                Err(Error::PromptBudget { .. }) => {
                    // headers plus cue alone exceed the limit
                    prop_assert!(3 * refs.len() + 1 > cfg.prompt_token_limit);
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
