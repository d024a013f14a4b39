//! Criteria strings as consumed by COUNTIF, SUMIFS and friends.
//!
//! A leading comparator (`=`, `<>`, `>`, `>=`, `<`, `<=`) is optional and
//! defaults to equality. Numeric operands compare numerically against
//! numeric cells; everything else compares as case-insensitive text, with
//! `*` and `?` wildcards under `=` / `<>`. Empty cells only satisfy the
//! blank criteria `""`/`"="`; any other criterion skips them.

use std::cmp::Ordering;

use super::ast::{Comparator, Criterion};
use crate::table::{date_to_serial, parse_date, parse_number, CellKind, CellValue};

pub fn match_criteria(value: &CellValue, criterion: &str) -> bool {
    matches_criterion(value, &Criterion::parse(criterion))
}

fn ordering_holds(cmp: Comparator, ord: Ordering) -> bool {
    match cmp {
        Comparator::Eq => ord == Ordering::Equal,
        Comparator::Ne => ord != Ordering::Equal,
        Comparator::Lt => ord == Ordering::Less,
        Comparator::Le => ord != Ordering::Greater,
        Comparator::Gt => ord == Ordering::Greater,
        Comparator::Ge => ord != Ordering::Less,
    }
}

fn numeric_operand(s: &str) -> Option<f64> {
    parse_number(s).or_else(|| parse_date(s).map(date_to_serial))
}

fn numeric_value(v: &CellValue) -> Option<f64> {
    match v.kind() {
        CellKind::Number(_) | CellKind::Date(_) => v.numeric(),
        CellKind::Text => numeric_operand(v.raw().trim()),
        _ => None,
    }
}

pub fn matches_criterion(value: &CellValue, criterion: &Criterion) -> bool {
    let cmp = criterion.comparator.unwrap_or(Comparator::Eq);
    let operand = criterion.operand.as_str();

    if value.is_empty() {
        return operand.is_empty() && cmp == Comparator::Eq;
    }
    if operand.is_empty() {
        return cmp == Comparator::Ne;
    }
    // type mismatch: only inequality holds
    let mismatch = cmp == Comparator::Ne;

    if let Some(target) = numeric_operand(operand.trim()) {
        return match numeric_value(value) {
            Some(x) => ordering_holds(cmp, x.partial_cmp(&target).unwrap_or(Ordering::Less)),
            None => mismatch,
        };
    }
    let op_trim = operand.trim();
    if op_trim.eq_ignore_ascii_case("true") || op_trim.eq_ignore_ascii_case("false") {
        let target = op_trim.eq_ignore_ascii_case("true");
        return match value.as_bool() {
            Some(b) => ordering_holds(cmp, b.cmp(&target)),
            None => mismatch,
        };
    }
    if !value.is_text() {
        return mismatch;
    }
    let text = value.raw().to_lowercase();
    let pattern = operand.to_lowercase();
    match cmp {
        Comparator::Eq => wildcard_match(&pattern, &text),
        Comparator::Ne => !wildcard_match(&pattern, &text),
        _ => ordering_holds(cmp, text.as_str().cmp(pattern.as_str())),
    }
}

/// Glob match with `*` (any run) and `?` (one character); no escapes.
pub fn wildcard_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0usize, 0usize);
    let mut star: Option<usize> = None;
    let mut resume = 0usize;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some(pi);
            resume = ti;
            pi += 1;
        } else if let Some(s) = star {
            pi = s + 1;
            resume += 1;
            ti = resume;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}
