//! Parser for the single-table SQL subset used by the conversion templates.
//!
//! ```text
//! SELECT [DISTINCT] item FROM w
//!   [WHERE cond (AND cond)*] [GROUP BY col, ...]
//!   [ORDER BY col [ASC|DESC]] [LIMIT n] [;]
//! item := col | MIN|MAX|SUM|AVG|COUNT '(' col ')' | COUNT '(' '*' ')' | COUNT '(' DISTINCT col ')'
//! cond := col (= | != | <> | < | <= | > | >=) literal
//! ```
//!
//! GROUP BY is accepted so it can be classified as unsupported; joins,
//! subqueries, OR and the rest of SQL are rejected as `Unsupported`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SqlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggFn {
    Min,
    Max,
    Sum,
    Avg,
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Projection {
    Column(String),
    Aggregate { func: AggFn, column: String },
    CountStar,
    CountDistinct(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SqlComparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl SqlComparator {
    /// Spreadsheet spelling (`!=` becomes `<>`).
    pub fn symbol(self) -> &'static str {
        match self {
            SqlComparator::Eq => "=",
            SqlComparator::Ne => "<>",
            SqlComparator::Lt => "<",
            SqlComparator::Le => "<=",
            SqlComparator::Gt => ">",
            SqlComparator::Ge => ">=",
        }
    }
}

/// Literal with its source spelling preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Number { value: f64, raw: String },
    Text(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number { raw, .. } => f.write_str(raw),
            Literal::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub column: String,
    pub comparator: SqlComparator,
    pub literal: Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderBy {
    pub column: String,
    pub descending: bool,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedSqlAst {
    pub select: Projection,
    pub distinct: bool,
    pub conditions: Vec<Condition>,
    pub order_by: Option<OrderBy>,
    /// Present only so classification can reject it.
    pub group_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(String),
    Str(String),
    Sym(&'static str),
}

const UNSUPPORTED_WORDS: &[&str] = &[
    "JOIN",
    "INNER",
    "LEFT",
    "RIGHT",
    "OUTER",
    "CROSS",
    "UNION",
    "INTERSECT",
    "EXCEPT",
    "OR",
    "NOT",
    "IN",
    "LIKE",
    "BETWEEN",
    "HAVING",
    "IS",
    "EXISTS",
    "CASE",
    "AS",
    "OFFSET",
    "NULL",
    "ABS",
    "LENGTH",
    "JULIANDAY",
    "SELECT",
];

fn tokenize(q: &str) -> Result<Vec<Tok>, SqlError> {
    let chars: Vec<char> = q.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Word(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push(Tok::Number(chars[start..i].iter().collect()));
        } else if c == '\'' || c == '"' || c == '`' {
            let quote = c;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(SqlError::Syntax("unterminated string literal".into())),
                    Some(&ch) if ch == quote => {
                        if chars.get(i + 1) == Some(&quote) {
                            s.push(quote);
                            i += 2;
                        } else {
                            i += 1;
                            break;
                        }
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Tok::Str(s));
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym: &'static str = match two.as_str() {
                "!=" => "!=",
                "<>" => "<>",
                "<=" => "<=",
                ">=" => ">=",
                _ => match c {
                    '=' => "=",
                    '<' => "<",
                    '>' => ">",
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    '*' => "*",
                    ';' => ";",
                    '+' | '-' | '/' | '.' => {
                        return Err(SqlError::Unsupported(format!("operator {c:?}")));
                    }
                    _ => return Err(SqlError::Syntax(format!("unexpected character {c:?}"))),
                },
            };
            i += sym.len();
            out.push(Tok::Sym(sym));
        }
    }
    Ok(out)
}

struct P {
    toks: Vec<Tok>,
    i: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i)
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    /// Error for the current token: unsupported SQL or plain syntax error.
    fn unexpected(&self, wanted: &str) -> SqlError {
        match self.peek() {
            Some(Tok::Word(w)) if UNSUPPORTED_WORDS.contains(&w.to_ascii_uppercase().as_str()) => {
                SqlError::Unsupported(w.to_ascii_uppercase())
            }
            Some(Tok::Sym("(")) => SqlError::Unsupported("nested expression".into()),
            Some(t) => SqlError::Syntax(format!("expected {wanted}, found {t:?}")),
            None => SqlError::Syntax(format!("expected {wanted}, found end of query")),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn column(&mut self) -> Result<String, SqlError> {
        match self.peek() {
            Some(Tok::Word(w)) if !is_reserved(w) => {
                let w = w.clone();
                self.i += 1;
                Ok(w)
            }
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("column name")),
        }
    }
}

fn is_reserved(w: &str) -> bool {
    const KW: &[&str] = &["SELECT", "FROM", "WHERE", "AND", "ORDER", "BY", "LIMIT", "ASC", "DESC", "GROUP", "DISTINCT"];
    let up = w.to_ascii_uppercase();
    KW.contains(&up.as_str()) || UNSUPPORTED_WORDS.contains(&up.as_str())
}

pub fn parse_sql(query: &str) -> Result<RestrictedSqlAst, SqlError> {
    if query.trim().is_empty() {
        return Err(SqlError::Syntax("empty query".into()));
    }
    let mut p = P { toks: tokenize(query)?, i: 0 };
    p.expect_kw("SELECT")?;
    let distinct = p.eat_kw("DISTINCT");
    let select = projection(&mut p)?;
    if matches!(p.peek(), Some(Tok::Sym(","))) {
        return Err(SqlError::Unsupported("multiple select items".into()));
    }
    p.expect_kw("FROM")?;
    match p.peek() {
        Some(Tok::Word(w)) if w == "w" => p.i += 1,
        Some(Tok::Word(w)) if !is_reserved(w) => return Err(SqlError::Unsupported(format!("table {w}"))),
        _ => return Err(p.unexpected("table w")),
    }
    let mut conditions = Vec::new();
    if p.eat_kw("WHERE") {
        loop {
            conditions.push(condition(&mut p)?);
            if !p.eat_kw("AND") {
                break;
            }
        }
    }
    let mut group_by = Vec::new();
    if p.eat_kw("GROUP") {
        p.expect_kw("BY")?;
        loop {
            group_by.push(p.column()?);
            if !p.eat_sym(",") {
                break;
            }
        }
    }
    let mut order_by = None;
    if p.eat_kw("ORDER") {
        p.expect_kw("BY")?;
        let column = p.column()?;
        let descending = if p.eat_kw("DESC") {
            true
        } else {
            p.eat_kw("ASC");
            false
        };
        if p.eat_sym(",") {
            return Err(SqlError::Unsupported("multiple sort keys".into()));
        }
        order_by = Some(OrderBy { column, descending, limit: None });
    }
    if p.eat_kw("LIMIT") {
        let n = match p.peek() {
            Some(Tok::Number(n)) => n.parse::<u64>().map_err(|_| SqlError::Syntax(format!("bad LIMIT {n}")))?,
            _ => return Err(p.unexpected("LIMIT count")),
        };
        p.i += 1;
        match order_by.as_mut() {
            Some(o) => o.limit = Some(n),
            None => return Err(SqlError::Unsupported("LIMIT without ORDER BY".into())),
        }
    }
    p.eat_sym(";");
    if p.peek().is_some() {
        return Err(p.unexpected("end of query"));
    }
    Ok(RestrictedSqlAst { select, distinct, conditions, order_by, group_by })
}

fn projection(p: &mut P) -> Result<Projection, SqlError> {
    let func = match p.peek() {
        Some(Tok::Word(w)) => match w.to_ascii_uppercase().as_str() {
            "MIN" => Some(AggFn::Min),
            "MAX" => Some(AggFn::Max),
            "SUM" => Some(AggFn::Sum),
            "AVG" => Some(AggFn::Avg),
            "COUNT" => Some(AggFn::Count),
            _ => None,
        },
        _ => None,
    };
    let is_call = matches!(p.toks.get(p.i + 1), Some(Tok::Sym("(")));
    let Some(func) = func.filter(|_| is_call) else {
        if matches!(p.toks.get(p.i + 1), Some(Tok::Sym("("))) {
            return Err(SqlError::Unsupported("function call".into()));
        }
        return Ok(Projection::Column(p.column()?));
    };
    p.i += 2;
    let proj = if func == AggFn::Count && p.eat_sym("*") {
        Projection::CountStar
    } else if func == AggFn::Count && p.eat_kw("DISTINCT") {
        Projection::CountDistinct(p.column()?)
    } else {
        Projection::Aggregate { func, column: p.column()? }
    };
    if !p.eat_sym(")") {
        return Err(p.unexpected("')'"));
    }
    Ok(proj)
}

fn condition(p: &mut P) -> Result<Condition, SqlError> {
    let column = p.column()?;
    let comparator = match p.peek() {
        Some(Tok::Sym("=")) => SqlComparator::Eq,
        Some(Tok::Sym("!=")) | Some(Tok::Sym("<>")) => SqlComparator::Ne,
        Some(Tok::Sym("<")) => SqlComparator::Lt,
        Some(Tok::Sym("<=")) => SqlComparator::Le,
        Some(Tok::Sym(">")) => SqlComparator::Gt,
        Some(Tok::Sym(">=")) => SqlComparator::Ge,
        _ => return Err(p.unexpected("comparison operator")),
    };
    p.i += 1;
    let literal = match p.peek() {
        Some(Tok::Number(n)) => {
            let value = n.parse::<f64>().map_err(|_| SqlError::Syntax(format!("bad number {n}")))?;
            Literal::Number { value, raw: n.clone() }
        }
        Some(Tok::Str(s)) => Literal::Text(s.clone()),
        Some(Tok::Word(_)) => return Err(SqlError::Unsupported("column-to-column comparison".into())),
        _ => return Err(p.unexpected("literal")),
    };
    p.i += 1;
    Ok(Condition { column, comparator, literal })
}
