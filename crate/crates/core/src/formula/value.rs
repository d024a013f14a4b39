use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::table::{date_to_serial, parse_date, parse_number, CellKind, CellValue};

/// Spreadsheet error values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorCode {
    Div0,
    Value,
    Ref,
    Na,
    Name,
    Unsupported,
}

impl ErrorCode {
    pub fn code(self) -> &'static str {
        match self {
            ErrorCode::Div0 => "DIV0",
            ErrorCode::Value => "VALUE",
            ErrorCode::Ref => "REF",
            ErrorCode::Na => "NA",
            ErrorCode::Name => "NAME",
            ErrorCode::Unsupported => "UNSUPPORTED",
        }
    }
}

impl fmt::Display for ErrorCode {
    /// Spreadsheet rendering, e.g. `#DIV/0!`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorCode::Div0 => "#DIV/0!",
            ErrorCode::Value => "#VALUE!",
            ErrorCode::Ref => "#REF!",
            ErrorCode::Na => "#N/A",
            ErrorCode::Name => "#NAME?",
            ErrorCode::Unsupported => "#UNSUPPORTED!",
        })
    }
}

/// Row-major 2-D block of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<CellValue>,
}

impl Array {
    pub fn column(cells: Vec<CellValue>) -> Array {
        Array { rows: cells.len(), cols: 1, cells }
    }

    pub fn get(&self, r: usize, c: usize) -> &CellValue {
        &self.cells[r * self.cols + c]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_vector(&self) -> bool {
        self.rows == 1 || self.cols == 1
    }
}

/// Intermediate evaluation value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(CellValue),
    Array(Array),
    Error(ErrorCode),
}

impl Value {
    pub fn number(n: f64) -> Value {
        if n.is_finite() {
            Value::Scalar(CellValue::number(n))
        } else {
            Value::Error(ErrorCode::Value)
        }
    }

    pub fn boolean(b: bool) -> Value {
        Value::Scalar(CellValue::boolean(b))
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Scalar(CellValue::text(s))
    }
}

/// Arithmetic coercion of a single value.
pub fn to_number(v: &CellValue) -> Result<f64, ErrorCode> {
    match v.kind() {
        CellKind::Number(n) => Ok(n),
        CellKind::Date(d) => Ok(date_to_serial(d)),
        CellKind::Bool(b) => Ok(if b { 1.0 } else { 0.0 }),
        CellKind::Empty => Ok(0.0),
        CellKind::Text => {
            let raw = v.raw().trim();
            if let Some(n) = parse_number(raw) {
                Ok(n)
            } else if let Some(d) = parse_date(raw) {
                Ok(date_to_serial(d))
            } else {
                Err(ErrorCode::Value)
            }
        }
    }
}

/// Truth value coercion used by IF, AND, OR, NOT and FILTER.
pub fn to_bool(v: &CellValue) -> Result<bool, ErrorCode> {
    match v.kind() {
        CellKind::Bool(b) => Ok(b),
        CellKind::Number(n) => Ok(n != 0.0),
        CellKind::Date(_) => Ok(true),
        CellKind::Empty => Ok(false),
        CellKind::Text => {
            let raw = v.raw().trim();
            if raw.eq_ignore_ascii_case("true") {
                Ok(true)
            } else if raw.eq_ignore_ascii_case("false") {
                Ok(false)
            } else {
                Err(ErrorCode::Value)
            }
        }
    }
}

/// Text used by `&`, CONCATENATE and the string functions.
pub fn to_text(v: &CellValue) -> String {
    v.display()
}

fn type_rank(v: &CellValue) -> u8 {
    match v.kind() {
        CellKind::Number(_) | CellKind::Date(_) => 0,
        CellKind::Text => 1,
        CellKind::Bool(_) => 2,
        CellKind::Empty => 0,
    }
}

/// Ordering for the comparison operators. Numbers sort before text before
/// booleans; text compares case-insensitively; an empty cell behaves as 0,
/// `""` or FALSE depending on the other side.
pub fn compare(a: &CellValue, b: &CellValue) -> Ordering {
    use CellKind::*;
    match (a.kind(), b.kind()) {
        (Empty, Empty) => Ordering::Equal,
        (Empty, Text) => "".cmp(b.raw().to_lowercase().as_str()),
        (Text, Empty) => a.raw().to_lowercase().as_str().cmp(""),
        (Empty, Bool(x)) => false.cmp(&x),
        (Bool(x), Empty) => x.cmp(&false),
        (Text, Text) => a.raw().to_lowercase().cmp(&b.raw().to_lowercase()),
        (Bool(x), Bool(y)) => x.cmp(&y),
        _ => {
            let (ra, rb) = (type_rank(a), type_rank(b));
            if ra != rb {
                return ra.cmp(&rb);
            }
            let x = a.numeric().unwrap_or(0.0);
            let y = b.numeric().unwrap_or(0.0);
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        }
    }
}
