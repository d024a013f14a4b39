use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("unparseable {format} source: {message}")]
    UnparseableSource { format: &'static str, message: String },
    #[error("table has no rows or no columns")]
    EmptyTable,
    #[error("table has {0} columns; at most 702 can be labeled")]
    TooManyColumns(usize),
    #[error("reference {0} is outside the table")]
    OutOfBounds(String),
    #[error("malformed cell reference {0:?}")]
    BadReference(String),
    #[error("header_rows={header_rows} must be smaller than the row count {n_rows}")]
    InvalidHeaderRows { header_rows: usize, n_rows: usize },
    #[error("data rows {start}..{end} do not fit a table of {n_rows} rows")]
    InvalidDataRows { start: usize, end: usize, n_rows: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulaError {
    #[error("formula is empty")]
    Empty,
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown function {name} at offset {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("{name} takes {min}..{max} arguments, got {got}")]
    Arity { name: String, got: usize, min: usize, max: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqlError {
    #[error("SQL syntax error: {0}")]
    Syntax(String),
    #[error("SQL shape outside the template grammar: {0}")]
    Unsupported(String),
    #[error("column {0} has no spreadsheet mapping")]
    UnmappedColumn(String),
    #[error("query matches no conversion template")]
    UnsupportedTemplate,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("no records to score")]
    EmptyDataset,
    #[error("gold label {0:?} is not a fact-verification label")]
    InvalidGold(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VoteError {
    #[error("no valid candidates to vote over")]
    NoValidCandidates,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("endpoint unavailable after {attempts} attempts: {message}")]
    EndpointUnavailable { attempts: usize, message: String },
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("malformed endpoint response: {0}")]
    BadResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}
