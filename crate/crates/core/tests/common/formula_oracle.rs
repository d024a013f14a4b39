//! Brute-force reference interpreter for randomly generated formulas.
//!
//! The generator builds formula text and its expected value side by side,
//! reading the grid directly instead of going through the engine. Values
//! are compared by type, with a relative tolerance on numbers.

use std::cmp::Ordering;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;

use sheetqa::formula::{execute_all, ErrorCode, EvalResult};
use sheetqa::table::{column_label, CellKind, CellValue, Table};

#[derive(Debug, Clone, PartialEq)]
pub enum V {
    Num(f64),
    Text(String),
    Bool(bool),
    Date(i64),
    Empty,
    Err(ErrorCode),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expect {
    One(V),
    Many(Vec<V>),
}

/// Row 0 holds header text; rows 1.. are data.
#[derive(Debug, Clone)]
pub struct Grid {
    pub rows: Vec<Vec<V>>,
}

#[derive(Debug, Clone)]
pub struct Case {
    pub grid: Grid,
    pub formula: String,
    pub expected: Expect,
}

const TEXTS: [&str; 7] = ["a", "b", "B", "abc", "x y", "ab", "Abc"];
const DATE_LO: i64 = 39_814; // 2009-01-01
const DATE_HI: i64 = 42_369; // 2015-12-31

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1899, 12, 30).unwrap()
}

pub fn iso(serial: i64) -> String {
    (epoch() + chrono::Duration::days(serial)).format("%Y-%m-%d").to_string()
}

impl Grid {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    /// 1-based row, 0-based column, as in A1 notation.
    pub fn at(&self, row: usize, col: usize) -> &V {
        &self.rows[row - 1][col]
    }

    pub fn raw(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v {
                        V::Num(n) => format!("{n}"),
                        V::Text(s) => s.clone(),
                        V::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
                        V::Date(d) => iso(*d),
                        V::Empty => String::new(),
                        V::Err(_) => unreachable!("grids hold no errors"),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn table(&self) -> Table {
        Table::from_rows("t", &self.raw(), 1).expect("generated grid is a valid table")
    }
}

fn random_cell<R: Rng>(rng: &mut R) -> V {
    match rng.gen_range(0..100) {
        0..=34 => V::Num(rng.gen_range(-5..=20) as f64),
        35..=44 => V::Num(rng.gen_range(-10..=40) as f64 / 2.0),
        45..=69 => V::Text(TEXTS.choose(rng).unwrap().to_string()),
        70..=77 => V::Bool(rng.gen_bool(0.5)),
        78..=89 => V::Empty,
        _ => V::Date(rng.gen_range(DATE_LO..=DATE_HI)),
    }
}

pub fn random_grid<R: Rng>(rng: &mut R) -> Grid {
    let n_rows = rng.gen_range(2..=10);
    let n_cols = rng.gen_range(1..=6);
    let mut rows = vec![(0..n_cols).map(|c| V::Text(format!("h{}", c + 1))).collect::<Vec<_>>()];
    for _ in 1..n_rows {
        rows.push((0..n_cols).map(|_| random_cell(rng)).collect());
    }
    Grid { rows }
}

// ---- reference semantics ----

fn num_of(v: &V) -> Result<f64, ErrorCode> {
    match v {
        V::Num(n) => Ok(*n),
        V::Date(d) => Ok(*d as f64),
        V::Bool(b) => Ok(f64::from(u8::from(*b))),
        V::Empty => Ok(0.0),
        V::Text(s) => s.trim().parse::<f64>().ok().or_else(|| iso_serial(s.trim())).ok_or(ErrorCode::Value),
        V::Err(e) => Err(*e),
    }
}

/// Numbers print with at most 15 significant digits.
fn show_number(n: f64) -> String {
    let r: f64 = format!("{n:.14e}").parse().unwrap();
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn text_of(v: &V) -> Result<String, ErrorCode> {
    Ok(match v {
        V::Num(n) => show_number(*n),
        V::Date(d) => iso(*d),
        V::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        V::Empty => String::new(),
        V::Text(s) => s.clone(),
        V::Err(e) => return Err(*e),
    })
}

fn truthy(v: &V) -> Result<bool, ErrorCode> {
    match v {
        V::Bool(b) => Ok(*b),
        V::Num(n) => Ok(*n != 0.0),
        V::Date(_) => Ok(true),
        V::Empty => Ok(false),
        V::Text(s) if s.eq_ignore_ascii_case("true") => Ok(true),
        V::Text(s) if s.eq_ignore_ascii_case("false") => Ok(false),
        V::Text(_) => Err(ErrorCode::Value),
        V::Err(e) => Err(*e),
    }
}

fn is_numeric(v: &V) -> bool {
    matches!(v, V::Num(_) | V::Date(_))
}

fn rank(v: &V) -> u8 {
    match v {
        V::Num(_) | V::Date(_) | V::Empty => 0,
        V::Text(_) => 1,
        _ => 2,
    }
}

/// Comparison-operator ordering: numbers < text < booleans, text without
/// case, blanks standing in for 0, "" or FALSE.
pub fn cmp(a: &V, b: &V) -> Ordering {
    use V::*;
    match (a, b) {
        (Empty, Empty) => Ordering::Equal,
        (Empty, Text(t)) => "".cmp(t.to_lowercase().as_str()),
        (Text(t), Empty) => t.to_lowercase().as_str().cmp(""),
        (Empty, Bool(x)) => false.cmp(x),
        (Bool(x), Empty) => x.cmp(&false),
        (Text(x), Text(y)) => x.to_lowercase().cmp(&y.to_lowercase()),
        (Bool(x), Bool(y)) => x.cmp(y),
        _ if rank(a) != rank(b) => rank(a).cmp(&rank(b)),
        _ => num_of(a).unwrap_or(0.0).partial_cmp(&num_of(b).unwrap_or(0.0)).unwrap(),
    }
}

pub fn glob(pattern: &str, text: &str) -> bool {
    let mut re = String::from("(?s)^");
    for ch in pattern.chars() {
        match ch {
            '*' => re.push_str(".*"),
            '?' => re.push('.'),
            c => re.push_str(&regex::escape(&c.to_string())),
        }
    }
    re.push('$');
    Regex::new(&re).unwrap().is_match(text)
}

fn holds(op: &str, ord: Ordering) -> bool {
    match op {
        "=" => ord == Ordering::Equal,
        "<>" => ord != Ordering::Equal,
        "<" => ord == Ordering::Less,
        "<=" => ord != Ordering::Greater,
        ">" => ord == Ordering::Greater,
        ">=" => ord != Ordering::Less,
        _ => unreachable!(),
    }
}

fn iso_serial(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let shape = b.len() == 10
        && b.iter().enumerate().all(|(i, c)| if i == 4 || i == 7 { *c == b'-' } else { c.is_ascii_digit() });
    if !shape {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| (d - epoch()).num_days() as f64)
}

/// Reference criteria semantics for the *IF / *IFS family.
pub fn criterion_holds(cell: &V, crit: &str) -> bool {
    let (op, operand) = ["<>", ">=", "<=", "=", ">", "<"]
        .iter()
        .find_map(|p| crit.strip_prefix(p).map(|rest| (*p, rest)))
        .unwrap_or(("=", crit));
    if matches!(cell, V::Empty) {
        return operand.is_empty() && op == "=";
    }
    if operand.is_empty() {
        return op == "<>";
    }
    let mismatch = op == "<>";
    if let Some(target) = operand.trim().parse::<f64>().ok().or_else(|| iso_serial(operand.trim())) {
        return match cell {
            V::Num(_) | V::Date(_) => holds(op, num_of(cell).unwrap().partial_cmp(&target).unwrap()),
            _ => mismatch,
        };
    }
    if operand.eq_ignore_ascii_case("true") || operand.eq_ignore_ascii_case("false") {
        let target = operand.eq_ignore_ascii_case("true");
        return match cell {
            V::Bool(b) => holds(op, b.cmp(&target)),
            _ => mismatch,
        };
    }
    let V::Text(t) = cell else { return mismatch };
    let (t, p) = (t.to_lowercase(), operand.to_lowercase());
    match op {
        "=" => glob(&p, &t),
        "<>" => !glob(&p, &t),
        _ => holds(op, t.as_str().cmp(p.as_str())),
    }
}

fn exact_lookup(lookup: &V, cand: &V) -> bool {
    match (lookup, cand) {
        (V::Text(p), V::Text(t)) => glob(&p.to_lowercase(), &t.to_lowercase()),
        (V::Empty, _) | (_, V::Empty) => false,
        _ => cmp(lookup, cand) == Ordering::Equal,
    }
}

fn extreme(items: &[V], want_max: bool) -> V {
    let mut best: Option<&V> = None;
    for v in items {
        let x = num_of(v).unwrap();
        if best.is_none_or(|b| {
            let y = num_of(b).unwrap();
            if want_max {
                x > y
            } else {
                x < y
            }
        }) {
            best = Some(v);
        }
    }
    match best {
        None => V::Err(ErrorCode::Na),
        Some(v) => v.clone(),
    }
}

fn average(items: &[V]) -> V {
    if items.is_empty() {
        V::Err(ErrorCode::Div0)
    } else {
        V::Num(items.iter().map(|v| num_of(v).unwrap()).sum::<f64>() / items.len() as f64)
    }
}

fn finite(x: f64) -> V {
    if x.is_finite() {
        V::Num(x)
    } else {
        V::Err(ErrorCode::Value)
    }
}

fn arith(op: &str, l: &V, r: &V) -> V {
    if let V::Err(e) = l {
        return V::Err(*e);
    }
    if let V::Err(e) = r {
        return V::Err(*e);
    }
    if op == "&" {
        return V::Text(text_of(l).unwrap() + &text_of(r).unwrap());
    }
    if ["=", "<>", "<", "<=", ">", ">="].contains(&op) {
        return V::Bool(holds(op, cmp(l, r)));
    }
    let (x, y) = match (num_of(l), num_of(r)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return V::Err(e),
    };
    match op {
        "+" => finite(x + y),
        "-" => finite(x - y),
        "*" => finite(x * y),
        "/" if y == 0.0 => V::Err(ErrorCode::Div0),
        "/" => finite(x / y),
        "^" => finite(x.powf(y)),
        _ => unreachable!("{op}"),
    }
}

fn precedence(op: &str) -> u8 {
    match op {
        "=" | "<>" | "<" | "<=" | ">" | ">=" => 1,
        "&" => 2,
        "+" | "-" => 3,
        "*" | "/" => 4,
        "^" => 5,
        _ => unreachable!(),
    }
}

// ---- generator ----

struct Gen<'g, R> {
    rng: &'g mut R,
    grid: &'g Grid,
}

fn a1(col: usize, row: usize) -> String {
    format!("{}{row}", column_label(col))
}

fn range_src(c1: usize, r1: usize, c2: usize, r2: usize) -> String {
    format!("{}:{}", a1(c1, r1), a1(c2, r2))
}

const CRITERIA: [&str; 26] = [
    "=3",
    ">2",
    "<=5",
    "<>b",
    "a",
    "a*",
    "?",
    "<>",
    "=",
    "",
    "B",
    ">=10",
    "TRUE",
    "<>TRUE",
    "*b*",
    ">b",
    "<=abc",
    "<>3",
    "x y",
    ">=2012-01-01",
    "<2010-06-30",
    "=-2",
    "ab?",
    "<0",
    "false",
    "=Abc",
];

impl<R: Rng> Gen<'_, R> {
    fn row(&mut self) -> usize {
        self.rng.gen_range(1..=self.grid.n_rows())
    }

    fn col(&mut self) -> usize {
        self.rng.gen_range(0..self.grid.n_cols())
    }

    fn rect(&mut self) -> (usize, usize, usize, usize) {
        let (a, b) = (self.row(), self.row());
        let (c, d) = (self.col(), self.col());
        (c.min(d), a.min(b), c.max(d), a.max(b))
    }

    fn cells(&self, (c1, r1, c2, r2): (usize, usize, usize, usize)) -> Vec<V> {
        let mut out = Vec::new();
        for r in r1..=r2 {
            for c in c1..=c2 {
                out.push(self.grid.at(r, c).clone());
            }
        }
        out
    }

    /// Start row and length of a column segment, mostly covering the data.
    fn segment(&mut self) -> (usize, usize) {
        let n = self.grid.n_rows();
        let top = if self.rng.gen_bool(0.7) { 2.min(n) } else { self.rng.gen_range(1..=n) };
        let len = if self.rng.gen_bool(0.6) { n - top + 1 } else { self.rng.gen_range(1..=n - top + 1) };
        (top, len)
    }

    /// A vertical segment of `len` rows starting at `top` in column `col`.
    fn column(&self, col: usize, top: usize, len: usize) -> (String, Vec<V>) {
        let bottom = top + len - 1;
        (range_src(col, top, col, bottom), (top..=bottom).map(|r| self.grid.at(r, col).clone()).collect())
    }

    fn leaf(&mut self) -> (String, V) {
        match self.rng.gen_range(0..100) {
            0..=44 => {
                let (r, c) = (self.row(), self.col());
                (a1(c, r), self.grid.at(r, c).clone())
            }
            45..=47 => {
                let r = self.grid.n_rows() + self.rng.gen_range(1..=3);
                let c = self.col();
                (a1(c, r), V::Err(ErrorCode::Ref))
            }
            48..=69 => {
                let n = if self.rng.gen_bool(0.8) {
                    self.rng.gen_range(0..=10) as f64
                } else {
                    [0.5, 2.5, 1.5][self.rng.gen_range(0..3)]
                };
                (format!("{n}"), V::Num(n))
            }
            70..=89 => {
                let t = ["a", "3", "", "B", "x y", "true", "a*"].choose(self.rng).unwrap().to_string();
                (format!("\"{t}\""), V::Text(t))
            }
            _ => {
                let b = self.rng.gen_bool(0.5);
                (if b { "TRUE" } else { "FALSE" }.to_string(), V::Bool(b))
            }
        }
    }

    fn aggregate(&mut self) -> (String, V) {
        let rect = self.rect();
        let name = *["SUM", "COUNT", "COUNTA", "AVERAGE", "MIN", "MAX"].choose(self.rng).unwrap();
        let mut cells = self.cells(rect);
        let mut src = format!("{name}({}", range_src(rect.0, rect.1, rect.2, rect.3));
        if self.rng.gen_bool(0.3) {
            let n = self.rng.gen_range(-3..=30) as f64;
            src.push_str(&format!(", {n}"));
            cells.push(V::Num(n));
        }
        src.push(')');
        let nums: Vec<V> = cells.iter().filter(|v| is_numeric(v)).cloned().collect();
        let v = match name {
            "SUM" => V::Num(nums.iter().map(|v| num_of(v).unwrap()).sum()),
            "COUNT" => V::Num(nums.len() as f64),
            "COUNTA" => V::Num(cells.iter().filter(|v| !matches!(v, V::Empty)).count() as f64),
            "AVERAGE" => average(&nums),
            "MIN" => extreme(&nums, false),
            _ => extreme(&nums, true),
        };
        (src, v)
    }

    fn criteria(&mut self) -> (String, V) {
        let (top, len) = self.segment();
        let crit = |g: &mut Self| CRITERIA.choose(g.rng).unwrap().to_string();
        let name = *["COUNTIF", "SUMIF", "AVERAGEIF", "COUNTIFS", "SUMIFS", "AVERAGEIFS", "MINIFS", "MAXIFS"]
            .choose(self.rng)
            .unwrap();
        let (c_a, c_b, c_t) = (self.col(), self.col(), self.col());
        let (src_a, cells_a) = self.column(c_a, top, len);
        let (src_b, cells_b) = self.column(c_b, top, len);
        let (src_t, cells_t) = self.column(c_t, top, len);
        let (k1, k2) = (crit(self), crit(self));
        let two = self.rng.gen_bool(0.5);
        let mask: Vec<bool> = (0..len)
            .map(|i| criterion_holds(&cells_a[i], &k1) && (!two || criterion_holds(&cells_b[i], &k2)))
            .collect();
        let single_mask: Vec<bool> = (0..len).map(|i| criterion_holds(&cells_a[i], &k1)).collect();
        let pick = |cells: &[V], m: &[bool]| -> Vec<V> {
            cells.iter().zip(m).filter(|(v, k)| **k && is_numeric(v)).map(|(v, _)| v.clone()).collect()
        };
        let pairs = if two { format!("{src_a},\"{k1}\", {src_b},\"{k2}\"") } else { format!("{src_a},\"{k1}\"") };
        match name {
            "COUNTIF" => {
                (format!("COUNTIF({src_a},\"{k1}\")"), V::Num(single_mask.iter().filter(|m| **m).count() as f64))
            }
            "COUNTIFS" => (format!("COUNTIFS({pairs})"), V::Num(mask.iter().filter(|m| **m).count() as f64)),
            "SUMIF" | "AVERAGEIF" => {
                let with_target = self.rng.gen_bool(0.6);
                let target = if with_target { &cells_t } else { &cells_a };
                let items = pick(target, &single_mask);
                let extra = if with_target { format!(",{src_t}") } else { String::new() };
                let src = format!("{name}({src_a},\"{k1}\"{extra})");
                let v = if name == "SUMIF" {
                    V::Num(items.iter().map(|v| num_of(v).unwrap()).sum())
                } else {
                    average(&items)
                };
                (src, v)
            }
            _ => {
                let items = pick(&cells_t, &mask);
                let v = match name {
                    "SUMIFS" => V::Num(items.iter().map(|v| num_of(v).unwrap()).sum()),
                    "AVERAGEIFS" => average(&items),
                    "MINIFS" => extreme(&items, false),
                    _ => extreme(&items, true),
                };
                (format!("{name}({src_t}, {pairs})"), v)
            }
        }
    }

    fn vector(&mut self) -> (String, Vec<V>) {
        if self.rng.gen_bool(0.8) {
            let (top, len) = self.segment();
            let c = self.col();
            self.column(c, top, len)
        } else {
            let r = self.row();
            let (a, b) = (self.col(), self.col());
            let (a, b) = (a.min(b), a.max(b));
            (range_src(a, r, b, r), (a..=b).map(|c| self.grid.at(r, c).clone()).collect())
        }
    }

    fn lookup_value(&mut self, cells: &[V]) -> (String, V) {
        // bias towards values that are present
        if !cells.is_empty() && self.rng.gen_bool(0.5) {
            let v = cells.choose(self.rng).unwrap().clone();
            let src = match &v {
                V::Num(n) => format!("{n}"),
                V::Text(s) => format!("\"{s}\""),
                V::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
                _ => return self.leaf(),
            };
            return (src, v);
        }
        self.leaf()
    }

    fn lookup(&mut self) -> (String, V) {
        match self.rng.gen_range(0..3) {
            0 => {
                let (vsrc, cells) = self.vector();
                let (lsrc, lv) = self.lookup_value(&cells);
                let v = match lv {
                    V::Err(e) => V::Err(e),
                    lv => match cells.iter().position(|c| exact_lookup(&lv, c)) {
                        Some(i) => V::Num((i + 1) as f64),
                        None => V::Err(ErrorCode::Na),
                    },
                };
                (format!("MATCH({lsrc},{vsrc},0)"), v)
            }
            1 => {
                let rect = self.rect();
                let (rows, cols) = (rect.3 - rect.1 + 1, rect.2 - rect.0 + 1);
                let i = self.rng.gen_range(1..=rows + 1);
                let j = self.rng.gen_range(1..=cols + 1);
                let v = if i > rows || j > cols {
                    V::Err(ErrorCode::Ref)
                } else {
                    self.grid.at(rect.1 + i - 1, rect.0 + j - 1).clone()
                };
                (format!("INDEX({},{i},{j})", range_src(rect.0, rect.1, rect.2, rect.3)), v)
            }
            _ => {
                let (top, len) = self.segment();
                let (cx, cy) = (self.col(), self.col());
                let (xsrc, xs) = self.column(cx, top, len);
                let (ysrc, ys) = self.column(cy, top, len);
                let (lsrc, lv) = self.lookup_value(&ys);
                let v = match lv {
                    V::Err(e) => V::Err(e),
                    lv => match ys.iter().position(|c| exact_lookup(&lv, c)) {
                        Some(i) => xs[i].clone(),
                        None => V::Err(ErrorCode::Na),
                    },
                };
                (format!("INDEX({xsrc}, MATCH({lsrc},{ysrc},0))"), v)
            }
        }
    }

    fn scalar(&mut self, depth: u32) -> (String, V) {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        match self.rng.gen_range(0..100) {
            0..=24 => {
                let op = *["+", "-", "*", "/", "^"].choose(self.rng).unwrap();
                let (ls, lv) = self.scalar(depth - 1);
                let (rs, rv) = self.scalar(depth - 1);
                (format!("({ls}){op}({rs})"), arith(op, &lv, &rv))
            }
            25..=31 => {
                let (ls, lv) = self.leaf();
                let (rs, rv) = self.leaf();
                (format!("{ls}&{rs}"), arith("&", &lv, &rv))
            }
            32..=41 => {
                let op = *["=", "<>", "<", "<=", ">", ">="].choose(self.rng).unwrap();
                let (ls, lv) = self.scalar(depth - 1);
                let (rs, rv) = self.scalar(depth - 1);
                (format!("({ls}){op}({rs})"), arith(op, &lv, &rv))
            }
            42..=47 => self.chain(),
            48..=52 => {
                let (s, v) = self.scalar(depth - 1);
                let pct = self.rng.gen_bool(0.4);
                let out = match num_of(&v) {
                    Err(e) => V::Err(e),
                    Ok(n) if pct => V::Num(n / 100.0),
                    Ok(n) => V::Num(-n),
                };
                (if pct { format!("({s})%") } else { format!("-({s})") }, out)
            }
            53..=57 => {
                let (cs, cv) = self.scalar(depth - 1);
                let (a, av) = self.scalar(depth - 1);
                let (b, bv) = self.scalar(depth - 1);
                let v = match truthy(&cv) {
                    Err(e) => V::Err(e),
                    Ok(true) => av,
                    Ok(false) => bv,
                };
                (format!("IF({cs},{a},{b})"), v)
            }
            58..=61 => {
                let (s, v) = self.scalar(depth - 1);
                let d = self.rng.gen_range(0..=2);
                let out = match num_of(&v) {
                    Err(e) => V::Err(e),
                    Ok(x) => {
                        let scale = 10f64.powi(d);
                        finite((x * scale).round() / scale)
                    }
                };
                (format!("ROUND({s},{d})"), out)
            }
            62..=64 => {
                let (s, v) = self.scalar(depth - 1);
                (format!("ABS({s})"), num_of(&v).map_or_else(V::Err, |x| V::Num(x.abs())))
            }
            65..=67 => {
                let (s, v) = self.leaf();
                (format!("LEN({s})"), text_of(&v).map_or_else(V::Err, |t| V::Num(t.chars().count() as f64)))
            }
            68..=79 => self.aggregate(),
            80..=91 => self.criteria(),
            _ => self.lookup(),
        }
    }

    /// Three operands joined by two operators without parentheses, checking
    /// precedence and left associativity.
    fn chain(&mut self) -> (String, V) {
        let ops = ["+", "-", "*", "/", "^", "&", "=", "<", ">="];
        let (o1, o2) = (*ops.choose(self.rng).unwrap(), *ops.choose(self.rng).unwrap());
        let (a, av) = self.leaf();
        let (b, bv) = self.leaf();
        let (c, cv) = self.leaf();
        let v = if precedence(o2) > precedence(o1) {
            arith(o1, &av, &arith(o2, &bv, &cv))
        } else {
            arith(o2, &arith(o1, &av, &bv), &cv)
        };
        (format!("({a}{o1}{b}{o2}{c})"), v)
    }

    fn array(&mut self) -> (String, Expect) {
        let (top, len) = self.segment();
        let (cx, cy) = (self.col(), self.col());
        let (xsrc, xs) = self.column(cx, top, len);
        let (ysrc, ys) = self.column(cy, top, len);
        match self.rng.gen_range(0..3) {
            0 => {
                let op = *["=", "<>", ">", "<="].choose(self.rng).unwrap();
                let (lsrc, lv) = self.lookup_value(&ys);
                let src = format!("FILTER({xsrc},{ysrc}{op}{lsrc})");
                if let V::Err(e) = lv {
                    return (src, Expect::One(V::Err(e)));
                }
                let kept: Vec<V> =
                    xs.iter().zip(&ys).filter(|(_, y)| holds(op, cmp(y, &lv))).map(|(x, _)| x.clone()).collect();
                if kept.is_empty() {
                    (src, Expect::One(V::Err(ErrorCode::Na)))
                } else {
                    (src, Expect::Many(kept))
                }
            }
            1 => {
                let mut seen = Vec::new();
                let mut out = Vec::new();
                for v in &xs {
                    let key = match v {
                        V::Num(_) | V::Date(_) => format!("n{}", num_of(v).unwrap()),
                        V::Text(s) => format!("t{}", s.to_lowercase()),
                        V::Bool(b) => format!("b{b}"),
                        _ => "e".to_string(),
                    };
                    if !seen.contains(&key) {
                        seen.push(key);
                        out.push(v.clone());
                    }
                }
                (format!("UNIQUE({xsrc})"), Expect::Many(out))
            }
            _ => {
                let op = *["+", "*", "-", "&"].choose(self.rng).unwrap();
                let (ls, lv) = self.leaf();
                let vals: Vec<V> = xs.iter().map(|x| arith(op, x, &lv)).collect();
                let src = format!("{xsrc}{op}{ls}");
                if len == 1 {
                    return (src, Expect::One(vals[0].clone()));
                }
                match vals.iter().find(|v| matches!(v, V::Err(_))) {
                    Some(e) => (src, Expect::One(e.clone())),
                    None => (src, Expect::Many(vals)),
                }
            }
        }
    }
}

pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let grid = random_grid(rng);
    let (formula, expected) = {
        let mut g = Gen { rng, grid: &grid };
        if g.rng.gen_bool(0.15) {
            let (s, e) = g.array();
            (s, e)
        } else {
            let (s, v) = g.scalar(3);
            (s, Expect::One(v))
        }
    };
    Case { grid, formula: format!("={formula}"), expected }
}

fn from_cell(c: &CellValue) -> V {
    match c.kind() {
        CellKind::Number(n) => V::Num(n),
        CellKind::Date(d) => V::Date((d - epoch()).num_days()),
        CellKind::Bool(b) => V::Bool(b),
        CellKind::Text => V::Text(c.raw().to_string()),
        CellKind::Empty => V::Empty,
    }
}

fn same(a: &V, b: &V) -> bool {
    match (a, b) {
        (V::Num(x), V::Num(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0),
        _ => a == b,
    }
}

/// Evaluate the case with the engine; `Err` describes a disagreement.
pub fn check(case: &Case) -> Result<(), String> {
    let table = case.grid.table();
    let results = execute_all(&case.formula, &table);
    let got = match results.as_slice() {
        [EvalResult::Scalar(c)] => Expect::One(from_cell(c)),
        [EvalResult::Error(e)] => Expect::One(V::Err(*e)),
        [EvalResult::Array(cs)] => Expect::Many(cs.iter().map(from_cell).collect()),
        other => return Err(format!("{}: expected one result, got {other:?}", case.formula)),
    };
    let ok = match (&got, &case.expected) {
        (Expect::One(a), Expect::One(b)) => same(a, b),
        (Expect::Many(a), Expect::Many(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(x, y)),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(format!(
            "{}\n  engine: {got:?}\n  oracle: {:?}\n  grid: {:?}",
            case.formula,
            case.expected,
            case.grid.raw()
        ))
    }
}
