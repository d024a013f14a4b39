//! Rewrite single-row lookups into direct cell references.

use crate::formula::functions::exact_match;
use crate::formula::{execute_all, format_result, parse_formula, to_bool, Evaluator, Expr, Value};
use crate::table::{CellRef, CellValue, Table};

/// If `formula` is a `FILTER` or `INDEX`/`MATCH` lookup that selects exactly
/// one row of `table`, return the equivalent `=<cell>` formula. The rewrite
/// is only returned when both formulas evaluate to the same answer.
pub fn simplify_lookup(formula: &str, table: &Table) -> Option<String> {
    let exprs = parse_formula(formula).ok()?;
    let [expr] = exprs.as_slice() else {
        return None;
    };
    let ev = Evaluator::new(table);
    let cell = single_row_target(&ev, expr)?;
    table.get(cell.row, cell.col)?;
    let simplified = format!("={cell}");
    let before = format_result(&execute_all(formula, table));
    let after = format_result(&execute_all(&simplified, table));
    (before.is_valid() && before == after).then_some(simplified)
}

fn call<'a>(expr: &'a Expr, want: &str) -> Option<&'a [Expr]> {
    match expr {
        Expr::Call { name, args } if name == want => Some(args),
        _ => None,
    }
}

fn range(expr: &Expr) -> Option<(CellRef, CellRef)> {
    match expr {
        Expr::Range { start, end } => Some((*start, *end)),
        _ => None,
    }
}

fn scalar(v: Value) -> Option<CellValue> {
    match v {
        Value::Scalar(c) => Some(c),
        Value::Array(a) if a.len() == 1 => Some(a.cells[0].clone()),
        _ => None,
    }
}

fn single_row_target(ev: &Evaluator<'_>, expr: &Expr) -> Option<CellRef> {
    if let Some([inner]) = call(expr, "UNIQUE") {
        return single_row_target(ev, inner);
    }
    if let Some([target, cond]) = call(expr, "FILTER") {
        let (start, end) = range(target)?;
        if start.col != end.col {
            return None;
        }
        let height = end.row - start.row + 1;
        let Value::Array(mask) = ev.eval(cond) else {
            return None;
        };
        if mask.cols != 1 || mask.rows != height {
            return None;
        }
        let hits: Vec<usize> = (0..height).filter(|&i| to_bool(&mask.cells[i]) == Ok(true)).collect();
        return match hits.as_slice() {
            [i] => Some(CellRef::new(start.col, start.row + i)),
            _ => None,
        };
    }
    if let Some([target, lookup]) = call(expr, "INDEX") {
        let (start, end) = range(target)?;
        let args = call(lookup, "MATCH")?;
        let [needle, haystack, Expr::Number(mode)] = args else {
            return None;
        };
        if *mode != 0.0 {
            return None;
        }
        let needle = scalar(ev.eval(needle))?;
        let Value::Array(hay) = ev.eval(haystack) else {
            return None;
        };
        let vertical = start.col == end.col;
        let horizontal = start.row == end.row;
        let len = if vertical { end.row - start.row + 1 } else { end.col - start.col + 1 };
        if !(vertical || horizontal) || !hay.is_vector() || hay.len() != len {
            return None;
        }
        let hits: Vec<usize> = (0..len).filter(|&i| exact_match(&needle, &hay.cells[i])).collect();
        return match hits.as_slice() {
            [i] if vertical => Some(CellRef::new(start.col, start.row + i)),
            [i] => Some(CellRef::new(start.col + i, start.row)),
            _ => None,
        };
    }
    None
}
