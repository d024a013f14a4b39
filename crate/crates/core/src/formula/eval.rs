use super::ast::{BinaryOp, Expr, UnaryOp};
use super::functions::registry;
use super::value::{compare, to_number, to_text, Array, ErrorCode, Value};
use crate::table::{CellRef, CellValue, Table};

/// Ranges may run past the last table row or column (those cells read as
/// blank) but not beyond this many cells in total.
const MAX_RANGE_CELLS: usize = 1 << 20;

/// Evaluates expressions against one table. Stateless apart from the borrow.
pub struct Evaluator<'t> {
    table: &'t Table,
}

impl<'t> Evaluator<'t> {
    pub fn new(table: &'t Table) -> Self {
        Evaluator { table }
    }

    pub fn table(&self) -> &'t Table {
        self.table
    }

    pub fn eval(&self, expr: &Expr) -> Value {
        match expr {
            Expr::Number(n) => Value::number(*n),
            Expr::Text(s) => Value::text(s.clone()),
            Expr::Bool(b) => Value::boolean(*b),
            Expr::Criteria(c) => Value::text(c.text()),
            Expr::Name(_) => Value::Error(ErrorCode::Name),
            Expr::Cell(r) => match self.table.get(r.row, r.col) {
                Some(c) => Value::Scalar(c.clone()),
                None => Value::Error(ErrorCode::Ref),
            },
            Expr::Range { start, end } => self.range(*start, *end),
            Expr::Columns { start, end } => {
                let rows = self.table.n_rows();
                self.range(CellRef::new(*start, 1), CellRef::new(*end, rows))
            }
            Expr::Unary { op, expr } => {
                let v = self.eval(expr);
                let op = *op;
                broadcast(&[v], |xs| {
                    let n = to_number(xs[0])?;
                    Ok(CellValue::number(match op {
                        UnaryOp::Neg => -n,
                        UnaryOp::Plus => n,
                        UnaryOp::Percent => n / 100.0,
                    }))
                })
            }
            Expr::Binary { op, left, right } => {
                let l = self.eval(left);
                let r = self.eval(right);
                let op = *op;
                broadcast(&[l, r], |xs| binary(op, xs[0], xs[1]))
            }
            Expr::Call { name, args } => match registry().get(name.as_str()) {
                // the parser rejects bad arities; trees built by hand may not
                Some(spec) if !spec.arity_ok(args.len()) => Value::Error(ErrorCode::Value),
                Some(spec) => (spec.eval)(self, args),
                None => Value::Error(ErrorCode::Name),
            },
        }
    }

    fn range(&self, start: CellRef, end: CellRef) -> Value {
        if start.row > self.table.n_rows() || start.col >= self.table.n_cols() {
            return Value::Error(ErrorCode::Ref);
        }
        let rows = end.row - start.row + 1;
        let cols = end.col - start.col + 1;
        if rows.saturating_mul(cols) > MAX_RANGE_CELLS {
            return Value::Error(ErrorCode::Ref);
        }
        let mut cells = Vec::with_capacity(rows * cols);
        for r in start.row..=end.row {
            for c in start.col..=end.col {
                cells.push(self.table.get(r, c).cloned().unwrap_or_else(CellValue::empty));
            }
        }
        Value::Array(Array { rows, cols, cells })
    }
}

fn binary(op: BinaryOp, a: &CellValue, b: &CellValue) -> Result<CellValue, ErrorCode> {
    use std::cmp::Ordering::*;
    let arith = |f: fn(f64, f64) -> f64| -> Result<CellValue, ErrorCode> {
        let x = to_number(a)?;
        let y = to_number(b)?;
        let r = f(x, y);
        if r.is_finite() {
            Ok(CellValue::number(r))
        } else {
            Err(ErrorCode::Value)
        }
    };
    match op {
        BinaryOp::Add => arith(|x, y| x + y),
        BinaryOp::Sub => arith(|x, y| x - y),
        BinaryOp::Mul => arith(|x, y| x * y),
        BinaryOp::Div => {
            let x = to_number(a)?;
            let y = to_number(b)?;
            if y == 0.0 {
                Err(ErrorCode::Div0)
            } else if (x / y).is_finite() {
                Ok(CellValue::number(x / y))
            } else {
                Err(ErrorCode::Value)
            }
        }
        BinaryOp::Pow => arith(f64::powf),
        BinaryOp::Concat => Ok(CellValue::text(to_text(a) + &to_text(b))),
        BinaryOp::Eq => Ok(CellValue::boolean(compare(a, b) == Equal)),
        BinaryOp::Ne => Ok(CellValue::boolean(compare(a, b) != Equal)),
        BinaryOp::Lt => Ok(CellValue::boolean(compare(a, b) == Less)),
        BinaryOp::Le => Ok(CellValue::boolean(compare(a, b) != Greater)),
        BinaryOp::Gt => Ok(CellValue::boolean(compare(a, b) == Greater)),
        BinaryOp::Ge => Ok(CellValue::boolean(compare(a, b) != Less)),
    }
}

/// Apply a scalar function element-wise. Single-element arrays act as
/// scalars; larger arrays must share one shape. An error anywhere makes the
/// whole result that error.
pub fn broadcast(values: &[Value], f: impl Fn(&[&CellValue]) -> Result<CellValue, ErrorCode>) -> Value {
    let mut shape: Option<(usize, usize)> = None;
    for v in values {
        match v {
            Value::Error(e) => return Value::Error(*e),
            Value::Array(a) if a.len() != 1 => match shape {
                None => shape = Some((a.rows, a.cols)),
                Some(s) if s == (a.rows, a.cols) => {}
                Some(_) => return Value::Error(ErrorCode::Value),
            },
            _ => {}
        }
    }
    let pick = |v: &'_ Value, i: usize| -> CellValue {
        match v {
            Value::Scalar(c) => c.clone(),
            Value::Array(a) if a.len() == 1 => a.cells[0].clone(),
            Value::Array(a) => a.cells[i].clone(),
            Value::Error(_) => unreachable!(),
        }
    };
    match shape {
        None => {
            let args: Vec<CellValue> = values.iter().map(|v| pick(v, 0)).collect();
            let refs: Vec<&CellValue> = args.iter().collect();
            match f(&refs) {
                Ok(c) => Value::Scalar(c),
                Err(e) => Value::Error(e),
            }
        }
        Some((rows, cols)) => {
            let mut cells = Vec::with_capacity(rows * cols);
            for i in 0..rows * cols {
                let args: Vec<CellValue> = values.iter().map(|v| pick(v, i)).collect();
                let refs: Vec<&CellValue> = args.iter().collect();
                match f(&refs) {
                    Ok(c) => cells.push(c),
                    Err(e) => return Value::Error(e),
                }
            }
            Value::Array(Array { rows, cols, cells })
        }
    }
}
