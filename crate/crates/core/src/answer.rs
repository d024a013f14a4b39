//! Answer normalization, denotation matching, dataset scoring and rewards.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::ScoreError;
use crate::table::{canonical_number, parse_date, parse_number};

const REL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartKind {
    Number,
    Date,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerPart {
    pub kind: PartKind,
    pub canonical: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub number_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date_value: Option<NaiveDate>,
}

impl AnswerPart {
    fn equivalent(&self, other: &AnswerPart) -> bool {
        match (self.kind, other.kind) {
            (PartKind::Number, PartKind::Number) => {
                let (a, b) = (self.number_value.unwrap_or(f64::NAN), other.number_value.unwrap_or(f64::NAN));
                a == b || (a - b).abs() <= REL_TOLERANCE * a.abs().max(b.abs())
            }
            (PartKind::Date, PartKind::Date) => self.date_value == other.date_value,
            (PartKind::Text, PartKind::Text) => self.canonical == other.canonical,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAnswer {
    pub parts: Vec<AnswerPart>,
}

impl NormalizedAnswer {
    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Canonical parts joined by `|` in their original order.
    pub fn canonical(&self) -> String {
        self.parts.iter().map(|p| p.canonical.as_str()).collect::<Vec<_>>().join("|")
    }

    /// Order-insensitive grouping key.
    pub fn key(&self) -> String {
        let mut parts: Vec<&str> = self.parts.iter().map(|p| p.canonical.as_str()).collect();
        parts.sort_unstable();
        parts.join("|")
    }
}

fn strip_decorations(s: &str) -> &str {
    let mut s = s.trim();
    loop {
        let before = s;
        for q in ['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'] {
            s = s.strip_prefix(q).unwrap_or(s);
            s = s.strip_suffix(q).unwrap_or(s);
        }
        s = s.trim_end_matches('.').trim();
        if s == before {
            return s;
        }
    }
}

fn normalize_part(raw: &str) -> Option<AnswerPart> {
    let s = strip_decorations(raw);
    if s.is_empty() {
        return None;
    }
    if let Some(v) = parse_number(s).filter(|v| v.is_finite()) {
        let canonical = canonical_number(v);
        // the canonical text is what gets compared on re-normalization
        let v = parse_number(&canonical).unwrap_or(v);
        return Some(AnswerPart { kind: PartKind::Number, canonical, number_value: Some(v), date_value: None });
    }
    if let Some(d) = parse_date(s) {
        return Some(AnswerPart {
            kind: PartKind::Date,
            canonical: d.format("%Y-%m-%d").to_string(),
            number_value: None,
            date_value: Some(d),
        });
    }
    let canonical = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    Some(AnswerPart { kind: PartKind::Text, canonical, number_value: None, date_value: None })
}

/// Split on `|` and canonicalize each non-empty part.
pub fn normalize_answer(raw: &str) -> NormalizedAnswer {
    NormalizedAnswer { parts: raw.split('|').filter_map(normalize_part).collect() }
}

/// How multi-part answers are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Multiset,
    Ordered,
}

impl MatchMode {
    pub fn matches(self, pred: &NormalizedAnswer, gold: &NormalizedAnswer) -> bool {
        match self {
            MatchMode::Multiset => denotation_match(pred, gold),
            MatchMode::Ordered => ordered_match(pred, gold),
        }
    }
}

pub fn ordered_match(pred: &NormalizedAnswer, gold: &NormalizedAnswer) -> bool {
    pred.parts.len() == gold.parts.len() && pred.parts.iter().zip(&gold.parts).all(|(a, b)| a.equivalent(b))
}

/// Order-insensitive match. Tolerant numeric equality is not transitive, so
/// parts are paired with a bipartite matching rather than by sorting.
pub fn denotation_match(pred: &NormalizedAnswer, gold: &NormalizedAnswer) -> bool {
    let n = pred.parts.len();
    if n != gold.parts.len() {
        return false;
    }
    let adj: Vec<Vec<usize>> =
        pred.parts.iter().map(|p| (0..n).filter(|&j| p.equivalent(&gold.parts[j])).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    (0..n).all(|i| augment(i, &adj, &mut vec![false; n], &mut owner))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "qa")]
    Qa,
    #[serde(rename = "fact", alias = "fact_verification")]
    FactVerification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub pred: String,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub accuracy: f64,
    pub n: usize,
    pub correct: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactLabel {
    Entailed,
    Refuted,
}

/// Map a model or formula output onto a verification label.
pub fn fact_label(pred: &str) -> Option<FactLabel> {
    match strip_decorations(pred).to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "entailed" => Some(FactLabel::Entailed),
        "false" | "0" | "no" | "refuted" => Some(FactLabel::Refuted),
        _ => None,
    }
}

fn gold_label(gold: &str) -> Result<FactLabel, ScoreError> {
    match gold.trim().to_ascii_lowercase().as_str() {
        "entailed" => Ok(FactLabel::Entailed),
        "refuted" => Ok(FactLabel::Refuted),
        _ => Err(ScoreError::InvalidGold(gold.to_string())),
    }
}

/// Correctness of one prediction under the given task.
pub fn is_correct(pred: &str, gold: &str, task: Task, mode: MatchMode) -> Result<bool, ScoreError> {
    match task {
        Task::Qa => Ok(mode.matches(&normalize_answer(pred), &normalize_answer(gold))),
        Task::FactVerification => {
            let gold = gold_label(gold)?;
            Ok(fact_label(pred) == Some(gold))
        }
    }
}

pub fn score_dataset(records: &[ScoreRecord], task: Task, mode: MatchMode) -> Result<ScoreReport, ScoreError> {
    if records.is_empty() {
        return Err(ScoreError::EmptyDataset);
    }
    let correct = records.iter().map(|r| is_correct(&r.pred, &r.gold, task, mode)).collect::<Result<Vec<bool>, _>>()?;
    let hits = correct.iter().filter(|&&c| c).count();
    Ok(ScoreReport { accuracy: hits as f64 / records.len() as f64, n: records.len(), correct })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(alias = "fast")]
    Direct,
    Cot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewardInputs {
    pub variant: Variant,
    pub format_ok: bool,
    pub correct: bool,
}

impl RewardInputs {
    pub fn reward(&self) -> f64 {
        match self.variant {
            Variant::Direct => reward_fast(self.correct),
            Variant::Cot => reward_cot(self.format_ok, self.correct),
        }
    }
}

pub fn reward_fast(correct: bool) -> f64 {
    if correct {
        1.0
    } else {
        0.0
    }
}

pub fn reward_cot(format_ok: bool, correct: bool) -> f64 {
    match (format_ok, correct) {
        (true, true) => 1.5,
        (true, false) => 0.5,
        (false, _) => 0.0,
    }
}
