//! Prompt construction for path scoring: instructions, document rendering
//! under token budgets, in-context demonstrations and score ensembling.

mod demos;
mod ensemble;
mod instructions;
mod render;

pub use demos::{build_demo_groups, demonstrations_from_examples, sample_demos, Demonstration};
pub use ensemble::{ensemble, EnsembleMode};
pub use instructions::{
    builtin_instructions, generate_instruction_candidates, load_instructions, save_instructions, Instruction,
    InstructionPosition, InstructionRecord, AFTER_PATH_TEMPLATE, BEFORE_PATH_TEMPLATE, DEFAULT_ENSEMBLE_SIZE,
};
pub use render::{render_icl_context, render_prompt, DocOrder, PromptConfig, RenderedPrompt, MAX_DEMOS_PER_CONTEXT};
