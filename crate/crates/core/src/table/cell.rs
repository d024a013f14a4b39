//! Typed cell values and the coercion rules that produce them from raw text.

use chrono::{Datelike, NaiveDate};
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Serialize, Serializer};

/// Typed payload of a cell. Text and empty cells carry no payload; their
/// content lives in [`CellValue::raw`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellKind {
    Number(f64),
    Text,
    Bool(bool),
    Date(NaiveDate),
    Empty,
}

/// A table cell: the verbatim source string plus its coerced interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellValue {
    raw: String,
    kind: CellKind,
}

impl CellValue {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            CellKind::Number(_) => "number",
            CellKind::Text => "text",
            CellKind::Bool(_) => "boolean",
            CellKind::Date(_) => "date",
            CellKind::Empty => "empty",
        }
    }

    pub fn empty() -> Self {
        CellValue { raw: String::new(), kind: CellKind::Empty }
    }

    /// Computed number; its raw form is the canonical rendering.
    pub fn number(v: f64) -> Self {
        CellValue { raw: canonical_number(v), kind: CellKind::Number(v) }
    }

    pub fn text(s: impl Into<String>) -> Self {
        CellValue { raw: s.into(), kind: CellKind::Text }
    }

    pub fn boolean(b: bool) -> Self {
        CellValue { raw: if b { "TRUE" } else { "FALSE" }.to_string(), kind: CellKind::Bool(b) }
    }

    pub fn date(d: NaiveDate) -> Self {
        CellValue { raw: d.format("%Y-%m-%d").to_string(), kind: CellKind::Date(d) }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self.kind {
            CellKind::Number(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<NaiveDate> {
        match self.kind {
            CellKind::Date(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.kind {
            CellKind::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.kind, CellKind::Empty)
    }

    pub fn is_text(&self) -> bool {
        matches!(self.kind, CellKind::Text)
    }

    /// Number for numeric-aggregation purposes: numbers and dates (as serials).
    pub fn numeric(&self) -> Option<f64> {
        match self.kind {
            CellKind::Number(n) => Some(n),
            CellKind::Date(d) => Some(date_to_serial(d)),
            _ => None,
        }
    }

    /// Canonical display form: numbers without trailing zeros, ISO dates,
    /// TRUE/FALSE, and the raw string for text.
    pub fn display(&self) -> String {
        match self.kind {
            CellKind::Number(n) => canonical_number(n),
            CellKind::Date(d) => d.format("%Y-%m-%d").to_string(),
            CellKind::Bool(b) => if b { "TRUE" } else { "FALSE" }.to_string(),
            CellKind::Text => self.raw.clone(),
            CellKind::Empty => String::new(),
        }
    }
}

impl Serialize for CellValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.display())
    }
}

/// Coerce a raw string into a typed cell. Total: anything unrecognized is text.
pub fn coerce_cell(raw: &str) -> CellValue {
    let trimmed = raw.trim();
    let kind = if trimmed.is_empty() {
        CellKind::Empty
    } else if let Some(n) = parse_number(trimmed) {
        CellKind::Number(n)
    } else if trimmed.eq_ignore_ascii_case("true") {
        CellKind::Bool(true)
    } else if trimmed.eq_ignore_ascii_case("false") {
        CellKind::Bool(false)
    } else if let Some(d) = parse_date(trimmed) {
        CellKind::Date(d)
    } else {
        CellKind::Text
    };
    CellValue { raw: raw.to_string(), kind }
}

static NUMBER_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"^([+-])?\s*[$€£]?\s*([+-])?((?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d*)?|\.\d+)(?:[eE]([+-]?\d+))?\s*(%)?$")
        .unwrap()
});

/// Parse a formatted number: optional sign, currency symbol, thousands
/// separators in groups of three, decimal part, exponent, trailing percent.
pub fn parse_number(s: &str) -> Option<f64> {
    let caps = NUMBER_RE.captures(s.trim())?;
    if caps.get(1).is_some() && caps.get(2).is_some() {
        return None;
    }
    let negative = caps.get(1).or(caps.get(2)).map(|m| m.as_str() == "-").unwrap_or(false);
    let digits: String = caps[3].chars().filter(|c| *c != ',').collect();
    let mut text = digits;
    if let Some(exp) = caps.get(4) {
        text.push('e');
        text.push_str(exp.as_str());
    }
    let mut v: f64 = text.parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    if caps.get(5).is_some() {
        v /= 100.0;
    }
    Some(if negative { -v } else { v })
}

static ISO_DATE_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\d{4}-\d{1,2}-\d{1,2}$").unwrap());
static MONTH_FIRST_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^([A-Za-z]+)\.?\s+(\d{1,2}),?\s+(\d{4})$").unwrap());
static DAY_FIRST_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(\d{1,2})\s+([A-Za-z]+)\.?,?\s+(\d{4})$").unwrap());

fn month_from_name(name: &str) -> Option<u32> {
    const MONTHS: [&str; 12] = [
        "january",
        "february",
        "march",
        "april",
        "may",
        "june",
        "july",
        "august",
        "september",
        "october",
        "november",
        "december",
    ];
    let lower = name.to_ascii_lowercase();
    if lower.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| {
            *m == lower || (lower.len() == 3 && m.starts_with(&lower)) || (lower == "sept" && *m == "september")
        })
        .map(|i| i as u32 + 1)
}

/// ISO `YYYY-MM-DD`, `Month D, YYYY` and `D Month YYYY`; anything else is not a date.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if ISO_DATE_RE.is_match(s) {
        return NaiveDate::parse_from_str(s, "%Y-%m-%d").ok();
    }
    if let Some(c) = MONTH_FIRST_RE.captures(s) {
        let m = month_from_name(&c[1])?;
        return NaiveDate::from_ymd_opt(c[3].parse().ok()?, m, c[2].parse().ok()?);
    }
    if let Some(c) = DAY_FIRST_RE.captures(s) {
        let m = month_from_name(&c[2])?;
        return NaiveDate::from_ymd_opt(c[3].parse().ok()?, m, c[1].parse().ok()?);
    }
    None
}

fn serial_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1899, 12, 30).unwrap()
}

/// Spreadsheet date serial (days since 1899-12-30).
pub fn date_to_serial(d: NaiveDate) -> f64 {
    (d - serial_epoch()).num_days() as f64
}

pub fn serial_to_date(serial: f64) -> Option<NaiveDate> {
    if !serial.is_finite() || !(0.0..=2_958_465.0).contains(&serial) {
        return None;
    }
    serial_epoch().checked_add_signed(chrono::Duration::days(serial.floor() as i64))
}

pub fn date_parts(d: NaiveDate) -> (i32, u32, u32) {
    (d.year(), d.month(), d.day())
}

/// Shortest decimal rendering after rounding to 15 significant digits, so
/// binary noise such as `0.1 + 0.2` prints as `0.3`.
pub fn canonical_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v.is_infinite() {
            v.to_string()
        } else {
            "0".into()
        };
    }
    let rounded: f64 = format!("{:.14e}", v).parse().unwrap_or(v);
    let s = rounded.to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}
