//! The function registry and every built-in function.
//!
//! Aggregators distinguish arguments that are references or arrays (only
//! numeric cells count; text, booleans and blanks are skipped) from direct
//! scalar arguments (coerced, so `SUM("3", TRUE)` is 4).

use std::collections::HashMap;

use once_cell::sync::Lazy;

use super::ast::{Criterion, Expr};
use super::criteria::{matches_criterion, wildcard_match};
use super::eval::{broadcast, Evaluator};
use super::value::{compare, to_bool, to_number, to_text, Array, ErrorCode, Value};
use crate::table::{date_parts, date_to_serial, parse_date, parse_number, serial_to_date, CellKind, CellValue};

pub type EvalFn = fn(&Evaluator<'_>, &[Expr]) -> Value;

/// Argument layout beyond a plain min/max count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgShape {
    Plain,
    /// `(range, criteria)` pairs only: COUNTIFS.
    Pairs,
    /// One target argument followed by `(range, criteria)` pairs: SUMIFS etc.
    TargetThenPairs,
    /// `range, criteria[, target]`: COUNTIF, SUMIF, AVERAGEIF.
    SingleCriteria,
}

pub struct FunctionSpec {
    pub name: &'static str,
    pub min_args: usize,
    pub max_args: usize,
    pub shape: ArgShape,
    pub eval: EvalFn,
}

impl FunctionSpec {
    pub fn arity_ok(&self, n: usize) -> bool {
        if n < self.min_args || n > self.max_args {
            return false;
        }
        match self.shape {
            ArgShape::Pairs => n.is_multiple_of(2),
            ArgShape::TargetThenPairs => n % 2 == 1,
            _ => true,
        }
    }

    /// Whether argument `i` is a criteria string.
    pub fn is_criteria_position(&self, i: usize) -> bool {
        match self.shape {
            ArgShape::Plain => false,
            ArgShape::Pairs => i % 2 == 1,
            ArgShape::TargetThenPairs => i >= 2 && i.is_multiple_of(2),
            ArgShape::SingleCriteria => i == 1,
        }
    }
}

const MANY: usize = 255;

macro_rules! spec {
    ($name:literal, $min:expr, $max:expr, $shape:ident, $f:expr) => {
        FunctionSpec { name: $name, min_args: $min, max_args: $max, shape: ArgShape::$shape, eval: $f }
    };
}

static REGISTRY: Lazy<HashMap<&'static str, FunctionSpec>> = Lazy::new(|| {
    let specs = vec![
        spec!("SUM", 1, MANY, Plain, f_sum),
        spec!("AVERAGE", 1, MANY, Plain, f_average),
        spec!("MIN", 1, MANY, Plain, f_min),
        spec!("MAX", 1, MANY, Plain, f_max),
        spec!("COUNT", 1, MANY, Plain, f_count),
        spec!("COUNTA", 1, MANY, Plain, f_counta),
        spec!("COUNTIF", 2, 2, SingleCriteria, f_countif),
        spec!("SUMIF", 2, 3, SingleCriteria, f_sumif),
        spec!("AVERAGEIF", 2, 3, SingleCriteria, f_averageif),
        spec!("COUNTIFS", 2, MANY - 1, Pairs, f_countifs),
        spec!("SUMIFS", 3, MANY, TargetThenPairs, f_sumifs),
        spec!("AVERAGEIFS", 3, MANY, TargetThenPairs, f_averageifs),
        spec!("MINIFS", 3, MANY, TargetThenPairs, f_minifs),
        spec!("MAXIFS", 3, MANY, TargetThenPairs, f_maxifs),
        spec!("UNIQUE", 1, 1, Plain, f_unique),
        spec!("INDEX", 2, 3, Plain, f_index),
        spec!("MATCH", 2, 3, Plain, f_match),
        spec!("FILTER", 2, 3, Plain, f_filter),
        spec!("IF", 2, 3, Plain, f_if),
        spec!("IFERROR", 2, 2, Plain, f_iferror),
        spec!("AND", 1, MANY, Plain, f_and),
        spec!("OR", 1, MANY, Plain, f_or),
        spec!("NOT", 1, 1, Plain, f_not),
        spec!("ABS", 1, 1, Plain, f_abs),
        spec!("ROUND", 1, 2, Plain, f_round),
        spec!("ROWS", 1, 1, Plain, f_rows),
        spec!("COLUMNS", 1, 1, Plain, f_columns),
        spec!("CONCATENATE", 1, MANY, Plain, f_concatenate),
        spec!("LEFT", 1, 2, Plain, f_left),
        spec!("RIGHT", 1, 2, Plain, f_right),
        spec!("MID", 3, 3, Plain, f_mid),
        spec!("LEN", 1, 1, Plain, f_len),
        spec!("VALUE", 1, 1, Plain, f_value),
        spec!("TEXT", 2, 2, Plain, f_text),
        spec!("YEAR", 1, 1, Plain, f_year),
        spec!("MONTH", 1, 1, Plain, f_month),
        spec!("DAY", 1, 1, Plain, f_day),
    ];
    specs.into_iter().map(|s| (s.name, s)).collect()
});

/// The frozen function registry.
pub fn registry() -> &'static HashMap<&'static str, FunctionSpec> {
    &REGISTRY
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(code) => return Value::Error(code),
        }
    };
}

// ---- argument helpers ----

/// Numeric items contributed by all arguments, keeping the source cell so
/// MIN/MAX can return a date when the extreme value is a date.
fn numeric_items(ev: &Evaluator<'_>, args: &[Expr]) -> Result<Vec<CellValue>, ErrorCode> {
    let mut out = Vec::new();
    for a in args {
        match ev.eval(a) {
            Value::Error(e) => return Err(e),
            Value::Array(arr) => out.extend(arr.cells.into_iter().filter(|c| c.numeric().is_some())),
            Value::Scalar(c) if a.is_reference() => {
                if c.numeric().is_some() {
                    out.push(c);
                }
            }
            Value::Scalar(c) => match c.kind() {
                CellKind::Number(_) | CellKind::Date(_) => out.push(c),
                CellKind::Empty => {}
                _ => out.push(CellValue::number(to_number(&c)?)),
            },
        }
    }
    Ok(out)
}

fn array_arg(ev: &Evaluator<'_>, e: &Expr) -> Result<Array, ErrorCode> {
    match ev.eval(e) {
        Value::Error(c) => Err(c),
        Value::Array(a) => Ok(a),
        Value::Scalar(c) => Ok(Array::column(vec![c])),
    }
}

fn scalar_arg(ev: &Evaluator<'_>, e: &Expr) -> Result<CellValue, ErrorCode> {
    match ev.eval(e) {
        Value::Error(c) => Err(c),
        Value::Scalar(c) => Ok(c),
        Value::Array(a) if a.len() == 1 => Ok(a.cells.into_iter().next().unwrap()),
        Value::Array(_) => Err(ErrorCode::Value),
    }
}

fn int_arg(ev: &Evaluator<'_>, e: &Expr) -> Result<i64, ErrorCode> {
    let n = to_number(&scalar_arg(ev, e)?)?;
    Ok(n.trunc() as i64)
}

fn criterion_arg(ev: &Evaluator<'_>, e: &Expr) -> Result<Criterion, ErrorCode> {
    if let Expr::Criteria(c) = e {
        return Ok(c.clone());
    }
    let c = scalar_arg(ev, e)?;
    Ok(Criterion::parse(&c.display()))
}

/// Row mask for `(range, criteria)` pairs. All ranges must have `len` cells.
fn criteria_mask(ev: &Evaluator<'_>, pairs: &[Expr], len: Option<usize>) -> Result<Vec<bool>, ErrorCode> {
    let mut mask: Option<Vec<bool>> = None;
    let mut expected = len;
    for pair in pairs.chunks(2) {
        let range = array_arg(ev, &pair[0])?;
        let crit = criterion_arg(ev, &pair[1])?;
        if let Some(n) = expected {
            if n != range.len() {
                return Err(ErrorCode::Value);
            }
        }
        expected = Some(range.len());
        let m = mask.get_or_insert_with(|| vec![true; range.len()]);
        for (slot, cell) in m.iter_mut().zip(&range.cells) {
            *slot = *slot && matches_criterion(cell, &crit);
        }
    }
    Ok(mask.unwrap_or_default())
}

fn masked_numbers(target: &Array, mask: &[bool]) -> Vec<CellValue> {
    target.cells.iter().zip(mask).filter(|(c, m)| **m && c.numeric().is_some()).map(|(c, _)| c.clone()).collect()
}

fn sum_of(items: &[CellValue]) -> f64 {
    items.iter().filter_map(CellValue::numeric).sum()
}

fn extreme(items: Vec<CellValue>, want_max: bool) -> Value {
    let mut best: Option<CellValue> = None;
    for c in items {
        let better = match &best {
            None => true,
            Some(b) => {
                let (x, y) = (c.numeric().unwrap(), b.numeric().unwrap());
                if want_max {
                    x > y
                } else {
                    x < y
                }
            }
        };
        if better {
            best = Some(c);
        }
    }
    match best {
        None => Value::Error(ErrorCode::Na),
        Some(c) if c.as_date().is_some() => Value::Scalar(CellValue::date(c.as_date().unwrap())),
        Some(c) => Value::number(c.numeric().unwrap()),
    }
}

fn average(items: &[CellValue]) -> Value {
    if items.is_empty() {
        Value::Error(ErrorCode::Div0)
    } else {
        Value::number(sum_of(items) / items.len() as f64)
    }
}

// ---- aggregation ----

fn f_sum(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    Value::number(sum_of(&tri!(numeric_items(ev, args))))
}

fn f_average(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    average(&tri!(numeric_items(ev, args)))
}

fn f_min(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    extreme(tri!(numeric_items(ev, args)), false)
}

fn f_max(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    extreme(tri!(numeric_items(ev, args)), true)
}

fn f_count(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let mut n = 0usize;
    for a in args {
        match ev.eval(a) {
            Value::Error(e) if a.is_reference() => return Value::Error(e),
            Value::Error(_) => {}
            Value::Array(arr) => n += arr.cells.iter().filter(|c| c.numeric().is_some()).count(),
            Value::Scalar(c) if a.is_reference() => n += usize::from(c.numeric().is_some()),
            Value::Scalar(c) => {
                n += usize::from(
                    c.numeric().is_some() || c.as_bool().is_some() || (c.is_text() && to_number(&c).is_ok()),
                )
            }
        }
    }
    Value::number(n as f64)
}

fn f_counta(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let mut n = 0usize;
    for a in args {
        match ev.eval(a) {
            Value::Error(e) if a.is_reference() => return Value::Error(e),
            Value::Error(_) => n += 1,
            Value::Array(arr) => n += arr.cells.iter().filter(|c| !c.is_empty()).count(),
            Value::Scalar(c) => n += usize::from(!c.is_empty()),
        }
    }
    Value::number(n as f64)
}

fn f_countif(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let mask = tri!(criteria_mask(ev, args, None));
    Value::number(mask.iter().filter(|m| **m).count() as f64)
}

fn f_countifs(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    f_countif(ev, args)
}

/// SUMIF/AVERAGEIF: optional third argument is the target range.
fn single_criteria_targets(ev: &Evaluator<'_>, args: &[Expr]) -> Result<Vec<CellValue>, ErrorCode> {
    let mask = criteria_mask(ev, &args[..2], None)?;
    let target = match args.get(2) {
        Some(e) => array_arg(ev, e)?,
        None => array_arg(ev, &args[0])?,
    };
    if target.len() != mask.len() {
        return Err(ErrorCode::Value);
    }
    Ok(masked_numbers(&target, &mask))
}

fn multi_criteria_targets(ev: &Evaluator<'_>, args: &[Expr]) -> Result<Vec<CellValue>, ErrorCode> {
    let target = array_arg(ev, &args[0])?;
    let mask = criteria_mask(ev, &args[1..], Some(target.len()))?;
    Ok(masked_numbers(&target, &mask))
}

fn f_sumif(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    Value::number(sum_of(&tri!(single_criteria_targets(ev, args))))
}

fn f_averageif(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    average(&tri!(single_criteria_targets(ev, args)))
}

fn f_sumifs(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    Value::number(sum_of(&tri!(multi_criteria_targets(ev, args))))
}

fn f_averageifs(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    average(&tri!(multi_criteria_targets(ev, args)))
}

fn f_minifs(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    extreme(tri!(multi_criteria_targets(ev, args)), false)
}

fn f_maxifs(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    extreme(tri!(multi_criteria_targets(ev, args)), true)
}

// ---- lookup and arrays ----

/// Equality key used by UNIQUE: numbers by value, text case-insensitively.
fn unique_key(c: &CellValue) -> String {
    match c.kind() {
        CellKind::Number(_) | CellKind::Date(_) => {
            format!("n:{}", crate::table::canonical_number(c.numeric().unwrap()))
        }
        CellKind::Bool(b) => format!("b:{b}"),
        CellKind::Text => format!("t:{}", c.raw().to_lowercase()),
        CellKind::Empty => "e:".to_string(),
    }
}

fn f_unique(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let arr = tri!(array_arg(ev, &args[0]));
    let mut seen = std::collections::HashSet::new();
    let cells: Vec<CellValue> = arr.cells.into_iter().filter(|c| seen.insert(unique_key(c))).collect();
    Value::Array(Array::column(cells))
}

fn f_index(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let arr = tri!(array_arg(ev, &args[0]));
    let first = tri!(int_arg(ev, &args[1]));
    let second = match args.get(2) {
        Some(e) => Some(tri!(int_arg(ev, e))),
        None => None,
    };
    if first < 0 || second.is_some_and(|s| s < 0) {
        return Value::Error(ErrorCode::Value);
    }
    let (row, col) = match second {
        Some(c) => (first as usize, c as usize),
        // a single row is indexed by column
        None if arr.rows == 1 && arr.cols > 1 => (1, first as usize),
        None if arr.cols == 1 => (first as usize, 1),
        None => (first as usize, 0),
    };
    if row > arr.rows || col > arr.cols {
        return Value::Error(ErrorCode::Ref);
    }
    match (row, col) {
        (0, 0) => Value::Array(arr),
        (0, c) => Value::Array(Array::column((0..arr.rows).map(|r| arr.get(r, c - 1).clone()).collect())),
        (r, 0) => Value::Array(Array {
            rows: 1,
            cols: arr.cols,
            cells: (0..arr.cols).map(|c| arr.get(r - 1, c).clone()).collect(),
        }),
        (r, c) => Value::Scalar(arr.get(r - 1, c - 1).clone()),
    }
}

pub(crate) fn exact_match(lookup: &CellValue, candidate: &CellValue) -> bool {
    match (lookup.kind(), candidate.kind()) {
        (CellKind::Text, CellKind::Text) => {
            wildcard_match(&lookup.raw().to_lowercase(), &candidate.raw().to_lowercase())
        }
        (CellKind::Empty, _) | (_, CellKind::Empty) => false,
        _ => compare(lookup, candidate) == std::cmp::Ordering::Equal,
    }
}

fn same_class(a: &CellValue, b: &CellValue) -> bool {
    let class = |c: &CellValue| match c.kind() {
        CellKind::Number(_) | CellKind::Date(_) => 0,
        CellKind::Text => 1,
        CellKind::Bool(_) => 2,
        CellKind::Empty => 3,
    };
    class(a) == class(b)
}

fn f_match(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let lookup = tri!(scalar_arg(ev, &args[0]));
    let arr = tri!(array_arg(ev, &args[1]));
    let mode = match args.get(2) {
        Some(e) => tri!(int_arg(ev, e)),
        None => 1,
    };
    if !arr.is_vector() {
        return Value::Error(ErrorCode::Na);
    }
    let found = match mode {
        0 => arr.cells.iter().position(|c| exact_match(&lookup, c)),
        m => {
            // approximate match over data assumed sorted (ascending for 1,
            // descending for -1): last position before the order breaks
            let mut last = None;
            for (i, c) in arr.cells.iter().enumerate() {
                if !same_class(&lookup, c) {
                    continue;
                }
                let ord = compare(c, &lookup);
                let ok = if m > 0 { ord != std::cmp::Ordering::Greater } else { ord != std::cmp::Ordering::Less };
                if ok {
                    last = Some(i);
                } else {
                    break;
                }
            }
            last
        }
    };
    match found {
        Some(i) => Value::number((i + 1) as f64),
        None => Value::Error(ErrorCode::Na),
    }
}

fn f_filter(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let arr = tri!(array_arg(ev, &args[0]));
    let include = tri!(array_arg(ev, &args[1]));
    let mut flags = Vec::with_capacity(include.len());
    for c in &include.cells {
        flags.push(tri!(to_bool(c)));
    }
    let result = if include.len() == arr.rows {
        let mut cells = Vec::new();
        let mut rows = 0;
        for (r, keep) in flags.iter().enumerate() {
            if *keep {
                rows += 1;
                cells.extend((0..arr.cols).map(|c| arr.get(r, c).clone()));
            }
        }
        Array { rows, cols: arr.cols, cells }
    } else if arr.rows == 1 && include.len() == arr.cols {
        let cells: Vec<CellValue> = arr.cells.iter().zip(&flags).filter(|(_, k)| **k).map(|(c, _)| c.clone()).collect();
        Array { rows: 1, cols: cells.len(), cells }
    } else {
        return Value::Error(ErrorCode::Value);
    };
    if result.is_empty() {
        return match args.get(2) {
            Some(e) => ev.eval(e),
            None => Value::Error(ErrorCode::Na),
        };
    }
    Value::Array(result)
}

// ---- logic ----

fn f_if(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    let cond = ev.eval(&args[0]);
    let otherwise = |ev: &Evaluator<'_>| match args.get(2) {
        Some(e) => ev.eval(e),
        None => Value::boolean(false),
    };
    match cond {
        Value::Error(e) => Value::Error(e),
        Value::Scalar(c) => {
            if tri!(to_bool(&c)) {
                ev.eval(&args[1])
            } else {
                otherwise(ev)
            }
        }
        arr @ Value::Array(_) => {
            let then = ev.eval(&args[1]);
            let other = otherwise(ev);
            broadcast(&[arr, then, other], |xs| Ok(if to_bool(xs[0])? { xs[1].clone() } else { xs[2].clone() }))
        }
    }
}

fn f_iferror(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    match ev.eval(&args[0]) {
        Value::Error(_) => ev.eval(&args[1]),
        v => v,
    }
}

fn logical_items(ev: &Evaluator<'_>, args: &[Expr]) -> Result<Vec<bool>, ErrorCode> {
    let mut out = Vec::new();
    for a in args {
        match ev.eval(a) {
            Value::Error(e) => return Err(e),
            Value::Array(arr) => out.extend(
                arr.cells
                    .iter()
                    .filter(|c| c.as_bool().is_some() || c.as_number().is_some())
                    .map(|c| to_bool(c).unwrap()),
            ),
            Value::Scalar(c) if a.is_reference() => {
                if c.as_bool().is_some() || c.as_number().is_some() {
                    out.push(to_bool(&c)?);
                }
            }
            Value::Scalar(c) => out.push(to_bool(&c)?),
        }
    }
    if out.is_empty() {
        return Err(ErrorCode::Value);
    }
    Ok(out)
}

fn f_and(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    Value::boolean(tri!(logical_items(ev, args)).into_iter().all(|b| b))
}

fn f_or(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    Value::boolean(tri!(logical_items(ev, args)).into_iter().any(|b| b))
}

fn lift(ev: &Evaluator<'_>, args: &[Expr], f: impl Fn(&[&CellValue]) -> Result<CellValue, ErrorCode>) -> Value {
    let values: Vec<Value> = args.iter().map(|a| ev.eval(a)).collect();
    broadcast(&values, f)
}

fn f_not(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| Ok(CellValue::boolean(!to_bool(x[0])?)))
}

// ---- math ----

fn finite(n: f64) -> Result<CellValue, ErrorCode> {
    if n.is_finite() {
        Ok(CellValue::number(n))
    } else {
        Err(ErrorCode::Value)
    }
}

fn f_abs(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| finite(to_number(x[0])?.abs()))
}

/// Round half away from zero, judged at 15 significant digits so that
/// `ROUND(2.675, 2)` is 2.68 as a spreadsheet shows it.
pub fn round_half_away(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    let scaled: f64 = format!("{:.14e}", x * scale).parse().unwrap_or(x * scale);
    scaled.round() / scale
}

fn f_round(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| {
        let n = to_number(x[0])?;
        let d = match x.get(1) {
            Some(c) => to_number(c)?.trunc() as i32,
            None => 0,
        };
        finite(round_half_away(n, d.clamp(-15, 15)))
    })
}

fn f_rows(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    match ev.eval(&args[0]) {
        Value::Error(e) => Value::Error(e),
        Value::Scalar(_) => Value::number(1.0),
        Value::Array(a) => Value::number(a.rows as f64),
    }
}

fn f_columns(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    match ev.eval(&args[0]) {
        Value::Error(e) => Value::Error(e),
        Value::Scalar(_) => Value::number(1.0),
        Value::Array(a) => Value::number(a.cols as f64),
    }
}

// ---- text ----

fn f_concatenate(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |xs| Ok(CellValue::text(xs.iter().map(|c| to_text(c)).collect::<String>())))
}

fn count_arg(c: Option<&&CellValue>, default: i64) -> Result<usize, ErrorCode> {
    let n = match c {
        Some(c) => to_number(c)?.trunc() as i64,
        None => default,
    };
    usize::try_from(n).map_err(|_| ErrorCode::Value)
}

fn f_left(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| {
        let n = count_arg(x.get(1), 1)?;
        Ok(CellValue::text(to_text(x[0]).chars().take(n).collect::<String>()))
    })
}

fn f_right(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| {
        let n = count_arg(x.get(1), 1)?;
        let chars: Vec<char> = to_text(x[0]).chars().collect();
        Ok(CellValue::text(chars[chars.len().saturating_sub(n)..].iter().collect::<String>()))
    })
}

fn f_mid(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| {
        let start = count_arg(x.get(1), 1)?;
        let n = count_arg(x.get(2), 0)?;
        if start < 1 {
            return Err(ErrorCode::Value);
        }
        Ok(CellValue::text(to_text(x[0]).chars().skip(start - 1).take(n).collect::<String>()))
    })
}

fn f_len(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| Ok(CellValue::number(to_text(x[0]).chars().count() as f64)))
}

fn f_value(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| match x[0].kind() {
        CellKind::Bool(_) => Err(ErrorCode::Value),
        _ => to_number(x[0]).map(CellValue::number),
    })
}

fn f_text(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| format_text(x[0], &to_text(x[1])).map(CellValue::text))
}

fn date_arg(c: &CellValue) -> Result<chrono::NaiveDate, ErrorCode> {
    match c.kind() {
        CellKind::Date(d) => Ok(d),
        CellKind::Number(n) => serial_to_date(n).ok_or(ErrorCode::Value),
        CellKind::Text => parse_date(c.raw()).ok_or(ErrorCode::Value),
        CellKind::Empty => serial_to_date(0.0).ok_or(ErrorCode::Value),
        CellKind::Bool(_) => Err(ErrorCode::Value),
    }
}

fn f_year(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| Ok(CellValue::number(date_parts(date_arg(x[0])?).0 as f64)))
}

fn f_month(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| Ok(CellValue::number(date_parts(date_arg(x[0])?).1 as f64)))
}

fn f_day(ev: &Evaluator<'_>, args: &[Expr]) -> Value {
    lift(ev, args, |x| Ok(CellValue::number(date_parts(date_arg(x[0])?).2 as f64)))
}

/// TEXT() formats: `@`, `General`, numeric masks built from `0 # , .` with an
/// optional `%`, and date masks from `yyyy yy mmmm mmm mm m dd d`.
pub fn format_text(value: &CellValue, fmt: &str) -> Result<String, ErrorCode> {
    if fmt == "@" || fmt.eq_ignore_ascii_case("general") {
        return Ok(value.display());
    }
    let lower = fmt.to_ascii_lowercase();
    if !lower.is_empty() && lower.chars().all(|c| "ymd-/ .,".contains(c)) && lower.chars().any(|c| "ymd".contains(c)) {
        let date = match value.kind() {
            CellKind::Text => parse_date(value.raw()).ok_or(ErrorCode::Value)?,
            _ => date_arg(value)?,
        };
        return Ok(format_date(date, &lower));
    }
    let (body, percent) = match fmt.strip_suffix('%') {
        Some(b) => (b, true),
        None => (fmt, false),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let int_ok =
        !int_part.is_empty() && int_part.chars().all(|c| "0#,".contains(c)) && int_part.chars().any(|c| c != ',');
    if !int_ok || !frac_part.chars().all(|c| c == '0') {
        return Err(ErrorCode::Unsupported);
    }
    let mut n = match value.kind() {
        CellKind::Text => parse_number(value.raw()).ok_or(ErrorCode::Value)?,
        CellKind::Date(d) => date_to_serial(d),
        _ => to_number(value)?,
    };
    if percent {
        n *= 100.0;
    }
    let decimals = frac_part.len();
    let rounded = round_half_away(n, decimals as i32);
    let text = format!("{:.*}", decimals, rounded.abs());
    let (digits, frac) = match text.split_once('.') {
        Some((d, f)) => (d.to_string(), Some(f.to_string())),
        None => (text, None),
    };
    let min_int = int_part.chars().filter(|c| *c == '0').count();
    let mut digits = if digits == "0" && min_int == 0 { String::new() } else { digits };
    while digits.len() < min_int {
        digits.insert(0, '0');
    }
    if int_part.contains(',') {
        let bytes: Vec<char> = digits.chars().collect();
        let mut grouped = String::new();
        for (i, ch) in bytes.iter().enumerate() {
            if i > 0 && (bytes.len() - i).is_multiple_of(3) {
                grouped.push(',');
            }
            grouped.push(*ch);
        }
        digits = grouped;
    }
    let mut out = String::new();
    if rounded < 0.0 {
        out.push('-');
    }
    out.push_str(&digits);
    if let Some(f) = frac {
        out.push('.');
        out.push_str(&f);
    }
    if percent {
        out.push('%');
    }
    Ok(out)
}

fn format_date(d: chrono::NaiveDate, fmt: &str) -> String {
    use chrono::Datelike;
    const MONTHS: [&str; 12] = [
        "January",
        "February",
        "March",
        "April",
        "May",
        "June",
        "July",
        "August",
        "September",
        "October",
        "November",
        "December",
    ];
    let chars: Vec<char> = fmt.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let run = chars[i..].iter().take_while(|x| **x == c).count();
        match c {
            'y' => {
                if run >= 3 {
                    out.push_str(&format!("{:04}", d.year()));
                } else {
                    out.push_str(&format!("{:02}", d.year().rem_euclid(100)));
                }
            }
            'm' => match run {
                1 => out.push_str(&d.month().to_string()),
                2 => out.push_str(&format!("{:02}", d.month())),
                3 => out.push_str(&MONTHS[d.month0() as usize][..3]),
                _ => out.push_str(MONTHS[d.month0() as usize]),
            },
            'd' => match run {
                1 => out.push_str(&d.day().to_string()),
                _ => out.push_str(&format!("{:02}", d.day())),
            },
            other => {
                for _ in 0..run {
                    out.push(other);
                }
            }
        }
        i += run;
    }
    out
}
