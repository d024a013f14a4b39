//! Spreadsheet formula language: parsing, evaluation against a [`Table`],
//! and rendering of results as answer text.
//!
//! The function set is a fixed registry (see [`registry`]): the common
//! aggregates, the `*IF`/`*IFS` criteria family, INDEX/MATCH/FILTER/UNIQUE
//! lookups, logic, rounding, and a handful of text and date helpers.

mod ast;
mod criteria;
mod eval;
pub(crate) mod functions;
mod lexer;
mod parser;
mod value;

use serde::{Deserialize, Serialize};

pub use ast::{BinaryOp, Comparator, Criterion, Expr, UnaryOp};
pub use criteria::{match_criteria, matches_criterion, wildcard_match};
pub use eval::Evaluator;
pub use functions::{format_text, registry, round_half_away, ArgShape, FunctionSpec};
pub use lexer::{split_fragments, token_count};
pub use parser::{parse_formula, parse_single};
pub use value::{compare, to_bool, to_number, Array, ErrorCode, Value};

use crate::error::FormulaError;
use crate::table::{CellValue, Table};

/// Result of evaluating one formula. Arrays are flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalResult {
    Scalar(CellValue),
    Array(Vec<CellValue>),
    Error(ErrorCode),
}

impl EvalResult {
    pub fn is_error(&self) -> bool {
        matches!(self, EvalResult::Error(_))
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        match self {
            EvalResult::Error(e) => Some(*e),
            _ => None,
        }
    }

    /// Display strings of all values (an error yields its spreadsheet form).
    pub fn display_parts(&self) -> Vec<String> {
        match self {
            EvalResult::Scalar(c) => vec![c.display()],
            EvalResult::Array(cs) => cs.iter().map(CellValue::display).collect(),
            EvalResult::Error(e) => vec![e.to_string()],
        }
    }
}

impl From<Value> for EvalResult {
    fn from(v: Value) -> Self {
        match v {
            Value::Scalar(c) => EvalResult::Scalar(c),
            Value::Array(a) => EvalResult::Array(a.cells),
            Value::Error(e) => EvalResult::Error(e),
        }
    }
}

/// Evaluate one parsed formula against a table.
pub fn evaluate(expr: &Expr, table: &Table) -> EvalResult {
    Evaluator::new(table).eval(expr).into()
}

/// Error code a parse failure is reported as.
pub fn parse_error_code(err: &FormulaError) -> ErrorCode {
    match err {
        FormulaError::UnknownFunction { .. } => ErrorCode::Name,
        _ => ErrorCode::Value,
    }
}

/// Parse and evaluate every fragment, keeping the parse error distinct.
pub fn try_execute_all(src: &str, table: &Table) -> Result<Vec<EvalResult>, FormulaError> {
    let exprs = parse_formula(src)?;
    let ev = Evaluator::new(table);
    Ok(exprs.iter().map(|e| ev.eval(e).into()).collect())
}

/// Parse and evaluate every fragment. A parse failure becomes one error
/// result for the whole input; evaluation errors stay per fragment.
pub fn execute_all(src: &str, table: &Table) -> Vec<EvalResult> {
    match try_execute_all(src, table) {
        Ok(v) => v,
        Err(e) => vec![EvalResult::Error(parse_error_code(&e))],
    }
}

/// Answer text built from evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct FormattedAnswer {
    pub text: String,
    /// First error among the results; its presence makes the answer invalid.
    pub error: Option<ErrorCode>,
}

impl FormattedAnswer {
    pub fn is_valid(&self) -> bool {
        self.error.is_none()
    }
}

/// Join all values with `|`, arrays expanded in order.
pub fn format_result(results: &[EvalResult]) -> FormattedAnswer {
    let error = results.iter().find_map(EvalResult::error_code);
    let parts: Vec<String> = results.iter().flat_map(EvalResult::display_parts).collect();
    FormattedAnswer { text: parts.join("|"), error }
}

/// Structured execution result as printed by the `exec` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecReport {
    pub status: String,
    pub values: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ExecReport {
    pub fn from_source(src: &str, table: &Table) -> ExecReport {
        match try_execute_all(src, table) {
            Ok(results) => {
                let answer = format_result(&results);
                ExecReport {
                    status: if answer.is_valid() { "ok" } else { "error" }.into(),
                    values: results.iter().flat_map(EvalResult::display_parts).collect(),
                    error_code: answer.error,
                    message: None,
                }
            }
            Err(e) => ExecReport {
                status: "error".into(),
                values: vec![],
                error_code: Some(parse_error_code(&e)),
                message: Some(e.to_string()),
            },
        }
    }
}
