//! Prompt templates for inference and annotation.

use serde::{Deserialize, Serialize};

use crate::answer::Variant;
use crate::error::TableError;
use crate::table::{render_plain, render_spreadsheet, Table};
use crate::vote::Mode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub mode: Mode,
    pub variant: Variant,
    pub system: String,
    pub user: String,
}

const FAST_FORMULA_SYSTEM: &str =
    "You are an Excel Expert. Based on the Excel table, generate excel formula to answer the user question.";

const FAST_DP_SYSTEM: &str = "This is table question answering task, based on the given table, answer the given question. Only output the answer.";

const COT_FORMULA_SYSTEM: &str = "You are an advanced Table-question solving assistant with access to the Excel Formula Engine Tool. Given a question and the corresponding table, your task is to generate a formula to solve this question. I'll execute the generated formula to obtain the final answer.

## Response Structure
Your response must follow this specific format:
1. <think> ...think with less than 300 words ... </think>\\n\\n<formula>=...</formula>
2. If there are multiple formulas, join them with \"|\" (e.g. \"=MAX(A1:A10);=MIN(B2:B5)\" ).";

const COT_DP_SYSTEM: &str = "You are an advanced Table-question solving assistant. Given a question and the corresponding table, your task is to analyze the question and generate the final answer.

## Response Structure
Your response must follow this specific format:
1. <think> ...think with less than 300 words ... </think>\\n\\n<answer>The most concise answer</answer>
2. Ensure that the content inside `<answer>...</answer>` is as concise as possible (e.g. \"21 years\" should be \"21\"). Additionally, If there are multiple answers, join them with \"|\" (e.g. \"Tom|Carl|Lisa\").";

const ANNOTATE_DIRECT_SYSTEM: &str = "Given an Excel table, a question, and the answer to the question. Write an Excel formula (=???) to obtain the answer. You should only output the formula.";

const RETRY_INSTRUCTION: &str = "In the previous rounds, you attempted to generate the following formulas, but none of them is correct. Please try to generate the correct formula. You should only output the Formula.";

const FORMULA_REQUEST: &str = "[The Formula You think to answer the question]";

/// Formula mode sees the labelled spreadsheet view, answer mode the plain one.
pub fn table_view(mode: Mode, table: &Table) -> Result<String, TableError> {
    match mode {
        Mode::Formula => render_spreadsheet(table),
        Mode::Dp => Ok(render_plain(table)),
    }
}

fn header(title: &str, view: &str) -> String {
    format!("[Table Title] {title}\n[Table]\n{view}\n")
}

/// Inference prompt for one mode and variant.
pub fn build_prompt(
    mode: Mode,
    variant: Variant,
    table: &Table,
    title: &str,
    question: &str,
) -> Result<PromptSpec, TableError> {
    let system = match (mode, variant) {
        (Mode::Formula, Variant::Direct) => FAST_FORMULA_SYSTEM,
        (Mode::Dp, Variant::Direct) => FAST_DP_SYSTEM,
        (Mode::Formula, Variant::Cot) => COT_FORMULA_SYSTEM,
        (Mode::Dp, Variant::Cot) => COT_DP_SYSTEM,
    };
    let slot = match mode {
        Mode::Formula => "[Formula]",
        Mode::Dp => "[Answer]",
    };
    let user = format!("{}[Question]\n{question}\n{slot}\n", header(title, &table_view(mode, table)?));
    Ok(PromptSpec { mode, variant, system: system.to_string(), user })
}

/// A formula that failed verification, with what it evaluated to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WrongFormula {
    pub formula: String,
    pub result: String,
}

/// Formula annotation prompt. An empty `wrong` list gives the first-round
/// prompt; otherwise the earlier failures are listed for the retry round.
pub fn build_annotation_prompt(
    table: &Table,
    title: &str,
    question: &str,
    gold: &str,
    wrong: &[WrongFormula],
) -> Result<PromptSpec, TableError> {
    let mut user =
        format!("{}[Question] {question}\n[Gold Answer] {gold}\n", header(title, &table_view(Mode::Formula, table)?));
    if wrong.is_empty() {
        user.push_str(FORMULA_REQUEST);
    } else {
        user.push_str(RETRY_INSTRUCTION);
        user.push_str("\n[The wrong formula you generate in previous rounds]\n");
        for (i, w) in wrong.iter().enumerate() {
            user.push_str(&format!("{}. Formula is: {} ; Execution Results is: {}\n", i + 1, w.formula, w.result));
        }
        user.push_str(FORMULA_REQUEST);
        user.push('\n');
    }
    Ok(PromptSpec { mode: Mode::Formula, variant: Variant::Direct, system: ANNOTATE_DIRECT_SYSTEM.to_string(), user })
}

/// Reasoning-path annotation prompt for either mode.
pub fn build_cot_annotation_prompt(
    mode: Mode,
    table: &Table,
    title: &str,
    question: &str,
) -> Result<PromptSpec, TableError> {
    let system = match mode {
        Mode::Formula => COT_FORMULA_SYSTEM,
        Mode::Dp => COT_DP_SYSTEM,
    };
    let user = format!("{}[Question] {question}\n{FORMULA_REQUEST}", header(title, &table_view(mode, table)?));
    Ok(PromptSpec { mode, variant: Variant::Cot, system: system.to_string(), user })
}
