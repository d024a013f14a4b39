//! Annotation loops that keep only verified outputs.

use serde::{Deserialize, Serialize};

use super::prompt::{build_annotation_prompt, build_cot_annotation_prompt, WrongFormula};
use super::response::{parse_response, PayloadKind};
use super::transport::Sampler;
use crate::answer::{denotation_match, normalize_answer, NormalizedAnswer, Variant};
use crate::error::LlmError;
use crate::formula::{execute_all, format_result, token_count};
use crate::table::Table;
use crate::vote::Mode;

/// Length measure used to pick the most concise correct formula.
pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// Counts Unicode scalar values.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn count(&self, text: &str) -> usize {
        text.chars().count()
    }
}

/// Counts formula lexer tokens, falling back to characters when the text
/// does not lex.
#[derive(Debug, Clone, Copy, Default)]
pub struct FormulaTokenizer;

impl Tokenizer for FormulaTokenizer {
    fn count(&self, text: &str) -> usize {
        token_count(text).unwrap_or_else(|| text.chars().count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationStatus {
    Accepted,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub question: String,
    pub table_id: String,
    pub gold: NormalizedAnswer,
    pub formula: Option<String>,
    pub answer: Option<String>,
    pub cot: Option<String>,
    pub mode: Mode,
    pub variant: Variant,
    pub rounds_used: usize,
    pub status: AnnotationStatus,
}

pub struct AnnotateConfig<'a> {
    /// Samples per round in the direct loop.
    pub n: usize,
    pub max_rounds: usize,
    pub max_attempts: usize,
    pub temperature: f64,
    pub tokenizer: &'a dyn Tokenizer,
}

impl Default for AnnotateConfig<'_> {
    fn default() -> Self {
        AnnotateConfig { n: 10, max_rounds: 3, max_attempts: 3, temperature: 1.0, tokenizer: &CharTokenizer }
    }
}

/// Everything the loops need to know about one question.
pub struct AnnotationTask<'a> {
    pub id: Option<String>,
    pub question: &'a str,
    pub title: &'a str,
    pub table_id: &'a str,
    pub table: &'a Table,
    pub gold: &'a str,
}

impl AnnotationTask<'_> {
    fn record(&self, mode: Mode, variant: Variant) -> AnnotationRecord {
        AnnotationRecord {
            id: self.id.clone(),
            question: self.question.to_string(),
            table_id: self.table_id.to_string(),
            gold: normalize_answer(self.gold),
            formula: None,
            answer: None,
            cot: None,
            mode,
            variant,
            rounds_used: 0,
            status: AnnotationStatus::Exhausted,
        }
    }
}

/// Execute `formula` and report its answer text and whether it matches gold.
pub fn verify_formula(formula: &str, table: &Table, gold: &NormalizedAnswer) -> (String, bool) {
    let answer = format_result(&execute_all(formula, table));
    let ok = answer.is_valid() && denotation_match(&normalize_answer(&answer.text), gold);
    (answer.text, ok)
}

fn prompt_err(e: crate::error::TableError) -> LlmError {
    LlmError::InvalidRequest(e.to_string())
}

/// Sample formulas in rounds; accept the most concise verified one, feeding
/// earlier failures back into later rounds.
pub fn annotate_direct(
    sampler: &Sampler,
    task: &AnnotationTask<'_>,
    config: &AnnotateConfig<'_>,
) -> Result<AnnotationRecord, LlmError> {
    let mut record = task.record(Mode::Formula, Variant::Direct);
    let gold = &record.gold;
    let mut wrong: Vec<WrongFormula> = Vec::new();
    for round in 1..=config.max_rounds {
        let prompt =
            build_annotation_prompt(task.table, task.title, task.question, task.gold, &wrong).map_err(prompt_err)?;
        let first = ((round - 1) * config.n) as u64;
        let replies = sampler.sample(&prompt, config.n, config.temperature, first)?;
        let mut best: Option<(usize, usize, usize, String)> = None;
        for (i, reply) in replies.iter().enumerate() {
            let formula = parse_response(reply, Variant::Direct, PayloadKind::Formula).payload;
            if formula.is_empty() {
                continue;
            }
            let (result, ok) = verify_formula(&formula, task.table, gold);
            if ok {
                let key = (config.tokenizer.count(&formula), formula.len(), i, formula);
                if best.as_ref().is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                    best = Some(key);
                }
            } else if !wrong.iter().any(|w| w.formula == formula) {
                wrong.push(WrongFormula { formula, result });
            }
        }
        record.rounds_used = round;
        if let Some((_, _, _, formula)) = best {
            record.formula = Some(formula);
            record.status = AnnotationStatus::Accepted;
            return Ok(record);
        }
    }
    Ok(record)
}

/// One reasoning-path sample per attempt; keep the first that is well
/// formed and correct.
pub fn annotate_cot(
    sampler: &Sampler,
    task: &AnnotationTask<'_>,
    mode: Mode,
    config: &AnnotateConfig<'_>,
) -> Result<AnnotationRecord, LlmError> {
    let mut record = task.record(mode, Variant::Cot);
    let prompt = build_cot_annotation_prompt(mode, task.table, task.title, task.question).map_err(prompt_err)?;
    let kind = match mode {
        Mode::Formula => PayloadKind::Formula,
        Mode::Dp => PayloadKind::Answer,
    };
    for attempt in 1..=config.max_attempts {
        record.rounds_used = attempt;
        let reply = sampler.sample(&prompt, 1, config.temperature, (attempt - 1) as u64)?.remove(0);
        let parsed = parse_response(&reply, Variant::Cot, kind);
        if !parsed.format_ok || parsed.payload.is_empty() {
            continue;
        }
        let correct = match mode {
            Mode::Formula => verify_formula(&parsed.payload, task.table, &record.gold).1,
            Mode::Dp => denotation_match(&normalize_answer(&parsed.payload), &record.gold),
        };
        if correct {
            match mode {
                Mode::Formula => record.formula = Some(parsed.payload),
                Mode::Dp => record.answer = Some(parsed.payload),
            }
            record.cot = parsed.think;
            record.status = AnnotationStatus::Accepted;
            return Ok(record);
        }
    }
    Ok(record)
}
