//! Template-based translation of restricted SQL into spreadsheet formulas.

mod parse;
mod simplify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parse::{parse_sql, AggFn, Condition, Literal, OrderBy, Projection, RestrictedSqlAst, SqlComparator};
pub use simplify::simplify_lookup;

use crate::error::SqlError;
use crate::table::{column_index, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TemplateId {
    LookupEq,
    LookupFirstRow,
    LookupLastRow,
    AggPlain,
    CountAll,
    CountDistinct,
    AggCond,
    Argmin,
    Argmax,
    Unsupported,
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// Mapping from SQL column names to spreadsheet column letters plus the
/// 1-based inclusive row span of the data block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub columns: BTreeMap<String, String>,
    pub data_rows: (usize, usize),
}

impl ColumnMap {
    /// Exact name first, then the base name before a type suffix
    /// (`c4_number` falls back to `c4`).
    pub fn letter(&self, name: &str) -> Result<&str, SqlError> {
        if let Some(l) = self.columns.get(name) {
            return Ok(l);
        }
        if let Some((base, _)) = name.split_once('_') {
            if let Some(l) = self.columns.get(base) {
                return Ok(l);
            }
        }
        Err(SqlError::UnmappedColumn(name.to_string()))
    }

    fn range(&self, name: &str) -> Result<String, SqlError> {
        let l = self.letter(name)?;
        Ok(format!("{l}{}:{l}{}", self.data_rows.0, self.data_rows.1))
    }

    /// Column used for `COUNT(*)`: whatever `c1` maps to, else `A`.
    fn count_column(&self) -> String {
        self.columns.get("c1").cloned().unwrap_or_else(|| "A".to_string())
    }

    fn validate(&self) -> Result<(), SqlError> {
        let (s, e) = self.data_rows;
        if s == 0 || e < s {
            return Err(SqlError::Syntax(format!("invalid data_rows [{s}, {e}]")));
        }
        for (name, letter) in &self.columns {
            if column_index(letter).is_none() {
                return Err(SqlError::Syntax(format!("column {name} maps to invalid letter {letter:?}")));
            }
        }
        Ok(())
    }
}

/// Conditions that actually filter rows: the `agg = 0` marker for
/// non-aggregate rows is dropped. `None` if `agg` is used any other way.
fn effective_conditions(ast: &RestrictedSqlAst) -> Option<Vec<&Condition>> {
    let mut out = Vec::new();
    for c in &ast.conditions {
        if c.column == "agg" {
            let zero = matches!(c.literal, Literal::Number { value, .. } if value == 0.0);
            if c.comparator == SqlComparator::Eq && zero {
                continue;
            }
            return None;
        }
        out.push(c);
    }
    Some(out)
}

pub fn classify_template(ast: &RestrictedSqlAst) -> TemplateId {
    use TemplateId::*;
    if !ast.group_by.is_empty() {
        return Unsupported;
    }
    let Some(conds) = effective_conditions(ast) else {
        return Unsupported;
    };
    match (&ast.select, &ast.order_by) {
        (Projection::Column(_), Some(o)) => {
            if o.limit != Some(1) || !conds.is_empty() {
                Unsupported
            } else if o.column == "id" {
                if o.descending {
                    LookupLastRow
                } else {
                    LookupFirstRow
                }
            } else if o.descending {
                Argmax
            } else {
                Argmin
            }
        }
        (Projection::Column(_), None) if !conds.is_empty() => LookupEq,
        (Projection::Column(_), None) => Unsupported,
        (_, Some(_)) => Unsupported,
        (Projection::Aggregate { .. }, None) if conds.is_empty() => AggPlain,
        (Projection::CountStar, None) if conds.is_empty() => CountAll,
        (Projection::Aggregate { .. } | Projection::CountStar, None) => AggCond,
        (Projection::CountDistinct(_), None) if conds.is_empty() => CountDistinct,
        (Projection::CountDistinct(_), None) => Unsupported,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub formula: String,
    pub template_id: TemplateId,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn criterion(c: &Condition) -> String {
    quote(&format!("{}{}", c.comparator.symbol(), c.literal))
}

fn formula_literal(l: &Literal) -> String {
    match l {
        Literal::Number { raw, .. } => raw.clone(),
        Literal::Text(s) => quote(s),
    }
}

fn plain_fn(f: AggFn) -> &'static str {
    match f {
        AggFn::Min => "MIN",
        AggFn::Max => "MAX",
        AggFn::Sum => "SUM",
        AggFn::Avg => "AVERAGE",
        AggFn::Count => "COUNTA",
    }
}

fn ifs_fn(f: AggFn) -> &'static str {
    match f {
        AggFn::Min => "MINIFS",
        AggFn::Max => "MAXIFS",
        AggFn::Sum => "SUMIFS",
        AggFn::Avg => "AVERAGEIFS",
        AggFn::Count => "COUNTIFS",
    }
}

/// Translate a parsed query. Fails with `UnsupportedTemplate` when no
/// template applies and `UnmappedColumn` when a column has no letter.
pub fn convert_ast(ast: &RestrictedSqlAst, map: &ColumnMap) -> Result<Conversion, SqlError> {
    map.validate()?;
    let template_id = classify_template(ast);
    let conds = effective_conditions(ast).unwrap_or_default();
    let (start, end) = map.data_rows;
    let formula = match template_id {
        TemplateId::Unsupported => return Err(SqlError::UnsupportedTemplate),
        TemplateId::AggPlain => {
            let Projection::Aggregate { func, column } = &ast.select else { unreachable!() };
            format!("={}({})", plain_fn(*func), map.range(column)?)
        }
        TemplateId::CountAll => {
            let l = map.count_column();
            format!("=COUNTA({l}{start}:{l}{end})")
        }
        TemplateId::CountDistinct => {
            let Projection::CountDistinct(column) = &ast.select else { unreachable!() };
            format!("=COUNTA(UNIQUE({}))", map.range(column)?)
        }
        TemplateId::AggCond => {
            let mut pairs = Vec::with_capacity(conds.len());
            for c in &conds {
                pairs.push(format!("{},{}", map.range(&c.column)?, criterion(c)));
            }
            match &ast.select {
                Projection::Aggregate { func: AggFn::Count, .. } | Projection::CountStar => {
                    format!("=COUNTIFS({})", pairs.join(", "))
                }
                Projection::Aggregate { func, column } => {
                    format!("={}({}, {})", ifs_fn(*func), map.range(column)?, pairs.join(", "))
                }
                _ => unreachable!(),
            }
        }
        TemplateId::LookupEq => {
            let Projection::Column(column) = &ast.select else { unreachable!() };
            let mut tests = Vec::with_capacity(conds.len());
            for c in &conds {
                tests.push(format!(
                    "{}{}{}",
                    map.range(&c.column)?,
                    c.comparator.symbol(),
                    formula_literal(&c.literal)
                ));
            }
            let mask = if tests.len() == 1 {
                tests.remove(0)
            } else {
                tests.iter().map(|t| format!("({t})")).collect::<Vec<_>>().join("*")
            };
            let filter = format!("FILTER({},{mask})", map.range(column)?);
            if ast.distinct {
                format!("=UNIQUE({filter})")
            } else {
                format!("={filter}")
            }
        }
        TemplateId::LookupFirstRow | TemplateId::LookupLastRow => {
            let Projection::Column(column) = &ast.select else { unreachable!() };
            let row = if template_id == TemplateId::LookupFirstRow { start } else { end };
            format!("={}{row}", map.letter(column)?)
        }
        TemplateId::Argmin | TemplateId::Argmax => {
            let Projection::Column(column) = &ast.select else { unreachable!() };
            let key = map.range(&ast.order_by.as_ref().expect("classified with ORDER BY").column)?;
            let agg = if template_id == TemplateId::Argmin { "MIN" } else { "MAX" };
            format!("=INDEX({}, MATCH({agg}({key}),{key},0))", map.range(column)?)
        }
    };
    Ok(Conversion { formula, template_id })
}

pub fn convert(sql: &str, map: &ColumnMap) -> Result<Conversion, SqlError> {
    convert_ast(&parse_sql(sql)?, map)
}

/// Result of `convert` with optional table-aware simplification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvertOutput {
    pub formula: String,
    pub template_id: TemplateId,
    pub simplified: bool,
}

pub fn convert_and_simplify(sql: &str, map: &ColumnMap, table: Option<&Table>) -> Result<ConvertOutput, SqlError> {
    let Conversion { formula, template_id } = convert(sql, map)?;
    match table.and_then(|t| simplify_lookup(&formula, t)) {
        Some(f) => Ok(ConvertOutput { formula: f, template_id, simplified: true }),
        None => Ok(ConvertOutput { formula, template_id, simplified: false }),
    }
}
