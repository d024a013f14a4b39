//! Candidate generation in both modes followed by a mixed vote.

use serde::{Deserialize, Serialize};

use super::prompt::build_prompt;
use super::response::{parse_response, PayloadKind};
use super::transport::Sampler;
use crate::answer::Variant;
use crate::error::LlmError;
use crate::table::Table;
use crate::vote::{collect_candidates, vote_with, Candidate, Mode, TieRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferConfig {
    pub n_formula: usize,
    pub n_dp: usize,
    pub variant: Variant,
    pub temperature: f64,
    pub tie_rule: TieRule,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            n_formula: 5,
            n_dp: 5,
            variant: Variant::Direct,
            temperature: 0.7,
            tie_rule: TieRule::FormulaFirst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    /// Winning answer text; empty when no candidate was valid.
    pub answer: String,
    pub n_valid: usize,
    pub n_total: usize,
    pub tie_broken: bool,
    pub candidates: Vec<Candidate>,
}

fn payloads(
    sampler: &Sampler,
    mode: Mode,
    n: usize,
    table: &Table,
    title: &str,
    question: &str,
    cfg: &InferConfig,
) -> Result<Vec<String>, LlmError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let prompt =
        build_prompt(mode, cfg.variant, table, title, question).map_err(|e| LlmError::InvalidRequest(e.to_string()))?;
    let kind = match mode {
        Mode::Formula => PayloadKind::Formula,
        Mode::Dp => PayloadKind::Answer,
    };
    let replies = sampler.sample(&prompt, n, cfg.temperature, 0)?;
    Ok(replies
        .iter()
        .map(|r| {
            let p = parse_response(r, cfg.variant, kind);
            // badly formatted reasoning output counts as no answer
            if p.format_ok {
                p.payload
            } else {
                String::new()
            }
        })
        .collect())
}

pub fn infer_one(
    sampler: &Sampler,
    table: &Table,
    title: &str,
    question: &str,
    cfg: &InferConfig,
) -> Result<InferenceResult, LlmError> {
    if cfg.n_formula + cfg.n_dp == 0 {
        return Err(LlmError::InvalidRequest("at least one candidate is required".into()));
    }
    let formulas = payloads(sampler, Mode::Formula, cfg.n_formula, table, title, question, cfg)?;
    let answers = payloads(sampler, Mode::Dp, cfg.n_dp, table, title, question, cfg)?;
    let candidates = collect_candidates(&formulas, &answers, table);
    let n_total = candidates.len();
    Ok(match vote_with(&candidates, &cfg.tie_rule) {
        Ok(v) => {
            InferenceResult { answer: v.winner_text, n_valid: v.n_valid, n_total, tie_broken: v.tie_broken, candidates }
        }
        Err(_) => InferenceResult { answer: String::new(), n_valid: 0, n_total, tie_broken: false, candidates },
    })
}
