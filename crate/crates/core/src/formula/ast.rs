use std::fmt;

use crate::table::{column_label, CellRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Plus,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Concat => "&",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }
}

/// Comparator at the head of a criteria string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "<>",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

/// A parsed criteria string such as `"=60"` or `"<>b"`. `comparator` is
/// `None` when the string has no leading comparator (implicit equality).
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub comparator: Option<Comparator>,
    pub operand: String,
}

impl Criterion {
    pub fn parse(text: &str) -> Criterion {
        let ops: [(&str, Comparator); 6] = [
            ("<>", Comparator::Ne),
            (">=", Comparator::Ge),
            ("<=", Comparator::Le),
            ("=", Comparator::Eq),
            (">", Comparator::Gt),
            ("<", Comparator::Lt),
        ];
        for (sym, cmp) in ops {
            if let Some(rest) = text.strip_prefix(sym) {
                return Criterion { comparator: Some(cmp), operand: rest.to_string() };
            }
        }
        Criterion { comparator: None, operand: text.to_string() }
    }

    pub fn text(&self) -> String {
        format!("{}{}", self.comparator.map(Comparator::symbol).unwrap_or(""), self.operand)
    }
}

/// Parsed formula expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    Cell(CellRef),
    /// Rectangular range, normalized so `start` is top-left.
    Range {
        start: CellRef,
        end: CellRef,
    },
    /// Whole-column range such as `A:A` or `A:C`.
    Columns {
        start: usize,
        end: usize,
    },
    /// Bare identifier that is not a reference; evaluates to `#NAME?`.
    Name(String),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Criteria(Criterion),
}

impl Expr {
    pub fn range(a: CellRef, b: CellRef) -> Expr {
        Expr::Range {
            start: CellRef::new(a.col.min(b.col), a.row.min(b.row)),
            end: CellRef::new(a.col.max(b.col), a.row.max(b.row)),
        }
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Expr::Cell(_) | Expr::Range { .. } | Expr::Columns { .. })
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call { name: name.to_string(), args }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

impl fmt::Display for Expr {
    /// Formula text without the leading `=`. Nested operators are fully
    /// parenthesized so re-parsing gives back the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |e: &Expr| -> String {
            match e {
                Expr::Unary { .. } | Expr::Binary { .. } => format!("({e})"),
                Expr::Number(n) if *n < 0.0 => format!("({e})"),
                _ => e.to_string(),
            }
        };
        match self {
            Expr::Number(n) => write!(f, "{n}"),
            Expr::Text(s) => f.write_str(&quote(s)),
            Expr::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            Expr::Cell(r) => write!(f, "{r}"),
            Expr::Range { start, end } => write!(f, "{start}:{end}"),
            Expr::Columns { start, end } => write!(f, "{}:{}", column_label(*start), column_label(*end)),
            Expr::Name(n) => f.write_str(n),
            Expr::Unary { op: UnaryOp::Neg, expr } => write!(f, "-{}", child(expr)),
            Expr::Unary { op: UnaryOp::Plus, expr } => write!(f, "+{}", child(expr)),
            Expr::Unary { op: UnaryOp::Percent, expr } => write!(f, "{}%", child(expr)),
            Expr::Binary { op, left, right } => write!(f, "{}{}{}", child(left), op.symbol(), child(right)),
            Expr::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Criteria(c) => f.write_str(&quote(&c.text())),
        }
    }
}
