//! Recursive-descent parser for spreadsheet formulas.
//!
//! Precedence, loosest first: comparison, `&`, `+ -`, `* /`, `^`, postfix
//! `%`, prefix `- +`, then primaries (literals, references, calls).

use super::ast::{BinaryOp, Criterion, Expr, UnaryOp};
use super::functions::registry;
use super::lexer::{lex, split_fragments, Tok, Token};
use crate::error::FormulaError;
use crate::table::{column_index, CellRef};

/// Parse one or more formulas separated by top-level `|` or `;`.
pub fn parse_formula(src: &str) -> Result<Vec<Expr>, FormulaError> {
    if src.trim().is_empty() {
        return Err(FormulaError::Empty);
    }
    let mut out = Vec::new();
    for (offset, frag) in split_fragments(src) {
        if frag.trim().is_empty() {
            continue;
        }
        out.push(parse_single(frag, offset)?);
    }
    if out.is_empty() {
        return Err(FormulaError::Empty);
    }
    Ok(out)
}

/// Parse exactly one formula (no fragment splitting).
pub fn parse_single(src: &str, base: usize) -> Result<Expr, FormulaError> {
    let tokens = lex(src, base)?;
    let mut p = Parser { tokens, idx: 0 };
    if p.peek() == &Tok::Op("=") {
        p.idx += 1;
    }
    let expr = p.comparison()?;
    match p.peek() {
        Tok::Eof => Ok(expr),
        other => Err(FormulaError::Syntax { pos: p.pos(), message: format!("unexpected token {other:?}") }),
    }
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.idx].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.idx + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> usize {
        self.tokens[self.idx].pos
    }

    fn next(&mut self) -> Tok {
        let t = self.tokens[self.idx].tok.clone();
        if self.idx < self.tokens.len() - 1 {
            self.idx += 1;
        }
        t
    }

    fn syntax(&self, message: impl Into<String>) -> FormulaError {
        FormulaError::Syntax { pos: self.pos(), message: message.into() }
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinaryOp)],
        next: fn(&mut Parser) -> Result<Expr, FormulaError>,
    ) -> Result<Expr, FormulaError> {
        let mut left = next(self)?;
        'outer: loop {
            if let Tok::Op(sym) = self.peek() {
                for (s, op) in ops {
                    if sym == s {
                        self.next();
                        let right = next(self)?;
                        left = Expr::Binary { op: *op, left: Box::new(left), right: Box::new(right) };
                        continue 'outer;
                    }
                }
            }
            return Ok(left);
        }
    }

    fn comparison(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(
            &[
                ("=", BinaryOp::Eq),
                ("<>", BinaryOp::Ne),
                ("<=", BinaryOp::Le),
                (">=", BinaryOp::Ge),
                ("<", BinaryOp::Lt),
                (">", BinaryOp::Gt),
            ],
            Parser::concat,
        )
    }

    fn concat(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(&[("&", BinaryOp::Concat)], Parser::additive)
    }

    fn additive(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(&[("+", BinaryOp::Add), ("-", BinaryOp::Sub)], Parser::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(&[("*", BinaryOp::Mul), ("/", BinaryOp::Div)], Parser::power)
    }

    fn power(&mut self) -> Result<Expr, FormulaError> {
        self.binary_level(&[("^", BinaryOp::Pow)], Parser::percent)
    }

    fn percent(&mut self) -> Result<Expr, FormulaError> {
        let mut e = self.unary()?;
        while self.peek() == &Tok::Op("%") {
            self.next();
            e = Expr::Unary { op: UnaryOp::Percent, expr: Box::new(e) };
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        match self.peek() {
            Tok::Op("-") => {
                self.next();
                Ok(Expr::Unary { op: UnaryOp::Neg, expr: Box::new(self.unary()?) })
            }
            Tok::Op("+") => {
                self.next();
                Ok(Expr::Unary { op: UnaryOp::Plus, expr: Box::new(self.unary()?) })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        let pos = self.pos();
        match self.next() {
            Tok::Number(n) => Ok(Expr::Number(n)),
            Tok::Str(s) => Ok(Expr::Text(s)),
            Tok::LParen => {
                let e = self.comparison()?;
                if self.peek() != &Tok::RParen {
                    return Err(self.syntax("expected ')'"));
                }
                self.next();
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, pos),
            Tok::Eof => Err(FormulaError::Syntax { pos, message: "unexpected end of formula".into() }),
            other => Err(FormulaError::Syntax { pos, message: format!("unexpected token {other:?}") }),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Expr, FormulaError> {
        if self.peek() == &Tok::LParen {
            self.next();
            return self.call(name, pos);
        }
        if self.peek() == &Tok::Colon {
            if let Tok::Ident(rhs) = self.peek_at(1).clone() {
                if let (Ok(a), Ok(b)) = (name.parse::<CellRef>(), rhs.parse::<CellRef>()) {
                    self.next();
                    self.next();
                    return Ok(Expr::range(a, b));
                }
                let strip = |s: &str| s.trim_start_matches('$').to_string();
                if let (Some(a), Some(b)) = (column_index(&strip(&name)), column_index(&strip(&rhs))) {
                    self.next();
                    self.next();
                    return Ok(Expr::Columns { start: a.min(b), end: a.max(b) });
                }
            }
            return Err(FormulaError::Syntax { pos: self.pos(), message: "malformed range".into() });
        }
        if name.eq_ignore_ascii_case("TRUE") {
            return Ok(Expr::Bool(true));
        }
        if name.eq_ignore_ascii_case("FALSE") {
            return Ok(Expr::Bool(false));
        }
        if let Ok(r) = name.parse::<CellRef>() {
            return Ok(Expr::Cell(r));
        }
        Ok(Expr::Name(name))
    }

    fn call(&mut self, raw_name: String, pos: usize) -> Result<Expr, FormulaError> {
        let upper = raw_name.to_ascii_uppercase();
        let name = upper.strip_prefix("_XLFN.").unwrap_or(&upper).to_string();
        let mut args = Vec::new();
        if self.peek() == &Tok::RParen {
            self.next();
        } else {
            loop {
                args.push(self.comparison()?);
                match self.peek() {
                    Tok::Comma => {
                        self.next();
                    }
                    Tok::RParen => {
                        self.next();
                        break;
                    }
                    _ => return Err(self.syntax("expected ',' or ')'")),
                }
            }
        }
        let spec = registry().get(name.as_str()).ok_or(FormulaError::UnknownFunction { name: name.clone(), pos })?;
        if !spec.arity_ok(args.len()) {
            return Err(FormulaError::Arity { name, got: args.len(), min: spec.min_args, max: spec.max_args });
        }
        for (i, a) in args.iter_mut().enumerate() {
            if spec.is_criteria_position(i) {
                if let Expr::Text(s) = a {
                    *a = Expr::Criteria(Criterion::parse(s));
                }
            }
        }
        Ok(Expr::Call { name, args })
    }
}
