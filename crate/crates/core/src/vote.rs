//! Mixed self-consistency: majority vote over executed formula results and
//! direct answers.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::answer::{denotation_match, normalize_answer, NormalizedAnswer};
use crate::error::VoteError;
use crate::formula::{format_result, try_execute_all};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(alias = "DP")]
    Dp,
    #[serde(alias = "Formula")]
    Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    ExecError,
    ParseError,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mode: Mode,
    pub raw_output: String,
    /// Answer text: the executed result for formulas, the output itself otherwise.
    pub answer: Option<String>,
    pub normalized: Option<NormalizedAnswer>,
    pub invalid_reason: Option<InvalidReason>,
}

impl Candidate {
    pub fn valid(&self) -> bool {
        self.normalized.is_some()
    }

    fn invalid(mode: Mode, raw: &str, reason: InvalidReason) -> Candidate {
        Candidate { mode, raw_output: raw.to_string(), answer: None, normalized: None, invalid_reason: Some(reason) }
    }

    fn from_answer(mode: Mode, raw: &str, answer: String) -> Candidate {
        let normalized = normalize_answer(&answer);
        if normalized.is_empty() {
            return Candidate::invalid(mode, raw, InvalidReason::Empty);
        }
        Candidate {
            mode,
            raw_output: raw.to_string(),
            answer: Some(answer),
            normalized: Some(normalized),
            invalid_reason: None,
        }
    }

    pub fn from_formula(output: &str, table: &Table) -> Candidate {
        if output.trim().is_empty() {
            return Candidate::invalid(Mode::Formula, output, InvalidReason::Empty);
        }
        match try_execute_all(output, table) {
            Err(_) => Candidate::invalid(Mode::Formula, output, InvalidReason::ParseError),
            Ok(results) => {
                let answer = format_result(&results);
                if answer.is_valid() {
                    Candidate::from_answer(Mode::Formula, output, answer.text)
                } else {
                    Candidate::invalid(Mode::Formula, output, InvalidReason::ExecError)
                }
            }
        }
    }

    pub fn from_dp(output: &str) -> Candidate {
        Candidate::from_answer(Mode::Dp, output, output.trim().to_string())
    }
}

/// Formula candidates first (executed in parallel), then direct answers;
/// input order is kept within each group.
pub fn collect_candidates(formula_outputs: &[String], dp_outputs: &[String], table: &Table) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = formula_outputs.par_iter().map(|f| Candidate::from_formula(f, table)).collect();
    out.extend(dp_outputs.iter().map(|a| Candidate::from_dp(a)));
    out
}

/// Summary of one equivalence class, as seen by a tie-break rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassStats {
    pub size: usize,
    pub formula_members: usize,
    /// Input position of the class's first member.
    pub first_index: usize,
}

/// Orders two classes of equal size; `Less` means `a` wins.
pub trait TieBreak {
    fn prefer(&self, a: &ClassStats, b: &ClassStats) -> Ordering;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// More formula members first, then earliest input position.
    #[default]
    FormulaFirst,
    /// Earliest input position only.
    InputOrder,
}

impl TieBreak for TieRule {
    fn prefer(&self, a: &ClassStats, b: &ClassStats) -> Ordering {
        match self {
            TieRule::FormulaFirst => b.formula_members.cmp(&a.formula_members).then(a.first_index.cmp(&b.first_index)),
            TieRule::InputOrder => a.first_index.cmp(&b.first_index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub winner: NormalizedAnswer,
    /// Answer text of the winning class's first member.
    pub winner_text: String,
    pub tally: BTreeMap<String, usize>,
    pub n_valid: usize,
    pub n_total: usize,
    pub tie_broken: bool,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub fn vote(candidates: &[Candidate]) -> Result<VoteOutcome, VoteError> {
    vote_with(candidates, &TieRule::FormulaFirst)
}

pub fn vote_with(candidates: &[Candidate], rule: &dyn TieBreak) -> Result<VoteOutcome, VoteError> {
    let valid: Vec<(usize, &Candidate, &NormalizedAnswer)> =
        candidates.iter().enumerate().filter_map(|(i, c)| c.normalized.as_ref().map(|n| (i, c, n))).collect();
    if valid.is_empty() {
        return Err(VoteError::NoValidCandidates);
    }
    // equivalence classes under denotation_match, merged transitively
    let mut parent: Vec<usize> = (0..valid.len()).collect();
    for i in 0..valid.len() {
        for j in i + 1..valid.len() {
            if find(&mut parent, i) != find(&mut parent, j) && denotation_match(valid[i].2, valid[j].2) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    // roots are always the smallest member, so classes come out in input order
    let mut classes: Vec<(usize, ClassStats)> = Vec::new();
    for (k, &(index, cand, _)) in valid.iter().enumerate() {
        let root = find(&mut parent, k);
        let formula = usize::from(cand.mode == Mode::Formula);
        match classes.iter_mut().find(|(r, _)| *r == root) {
            Some((_, s)) => {
                s.size += 1;
                s.formula_members += formula;
            }
            None => classes.push((root, ClassStats { size: 1, formula_members: formula, first_index: index })),
        }
    }
    let mut tally = BTreeMap::new();
    for (root, s) in &classes {
        *tally.entry(valid[*root].2.key()).or_insert(0) += s.size;
    }
    let best = classes.iter().map(|(_, s)| s.size).max().unwrap_or(0);
    let tied: Vec<&(usize, ClassStats)> = classes.iter().filter(|(_, s)| s.size == best).collect();
    let (root, _) = tied.iter().copied().min_by(|a, b| rule.prefer(&a.1, &b.1)).expect("at least one class");
    let (_, cand, norm) = valid[*root];
    Ok(VoteOutcome {
        winner: norm.clone(),
        winner_text: cand.answer.clone().unwrap_or_default(),
        tally,
        n_valid: valid.len(),
        n_total: candidates.len(),
        tie_broken: tied.len() > 1,
    })
}
