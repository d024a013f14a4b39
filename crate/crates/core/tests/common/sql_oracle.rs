//! Reference evaluator for the restricted SQL subset, working on structured
//! queries so it shares no code with the transpiler. Each query also renders
//! itself as SQL text for the converter.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;

use sheetqa::answer::{normalize_answer, ordered_match};
use sheetqa::formula::{execute_all, format_result};
use sheetqa::sql::ColumnMap;
use sheetqa::table::Table;

#[derive(Debug, Clone, PartialEq)]
pub enum SqlVal {
    Null,
    Num(f64),
    Text(String),
}

impl SqlVal {
    fn literal(&self) -> String {
        match self {
            SqlVal::Num(n) => format!("{n}"),
            SqlVal::Text(s) => format!("'{}'", s.replace('\'', "''")),
            SqlVal::Null => "NULL".into(),
        }
    }

    fn cell(&self) -> String {
        match self {
            SqlVal::Num(n) => format!("{n}"),
            SqlVal::Text(s) => s.clone(),
            SqlVal::Null => String::new(),
        }
    }

    fn num(&self) -> Option<f64> {
        match self {
            SqlVal::Num(n) => Some(*n),
            _ => None,
        }
    }
}

/// SQLite storage-class ordering: NULL < numbers < text; text is binary.
fn sql_cmp(a: &SqlVal, b: &SqlVal) -> Ordering {
    use SqlVal::*;
    match (a, b) {
        (Null, Null) => Ordering::Equal,
        (Null, _) => Ordering::Less,
        (_, Null) => Ordering::Greater,
        (Num(x), Num(y)) => x.partial_cmp(y).unwrap(),
        (Num(_), Text(_)) => Ordering::Less,
        (Text(_), Num(_)) => Ordering::Greater,
        (Text(x), Text(y)) => x.cmp(y),
    }
}

/// A normalized table: named columns, each placed at a sheet column letter,
/// plus the `agg` marker for summary rows. Row order is the `id` order.
#[derive(Debug, Clone)]
pub struct SqlTable {
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<SqlVal>>,
    pub agg: Vec<bool>,
}

impl SqlTable {
    fn index(&self, name: &str) -> usize {
        self.columns.iter().position(|(n, _)| n == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    /// Data rows come first; summary rows follow them.
    pub fn data_rows(&self) -> (usize, usize) {
        (2, 1 + self.agg.iter().filter(|a| !**a).count())
    }

    pub fn column_map(&self) -> ColumnMap {
        ColumnMap {
            columns: self.columns.iter().map(|(n, l)| (n.clone(), l.clone())).collect(),
            data_rows: self.data_rows(),
        }
    }

    /// Spreadsheet view: header row, then one row per table row. Columns the
    /// query does not name are filled with a constant.
    pub fn sheet(&self) -> Table {
        let letters: Vec<usize> =
            self.columns.iter().map(|(_, l)| sheetqa::table::column_index(l).expect("valid letter")).collect();
        let width = letters.iter().max().unwrap() + 1;
        let mut header: Vec<String> = (0..width).map(|i| format!("col{i}")).collect();
        for ((name, _), &c) in self.columns.iter().zip(&letters) {
            header[c] = name.clone();
        }
        let mut out = vec![header];
        for row in &self.rows {
            let mut line = vec!["-".to_string(); width];
            for (v, &c) in row.iter().zip(&letters) {
                line[c] = v.cell();
            }
            out.push(line);
        }
        Table::from_rows("w", &out, 1).unwrap()
    }
}

#[derive(Debug, Clone)]
pub enum Select {
    Column(String),
    Agg(&'static str, String),
    CountStar,
    CountDistinct(String),
}

#[derive(Debug, Clone)]
pub struct Cond {
    pub column: String,
    pub op: &'static str,
    pub literal: SqlVal,
}

#[derive(Debug, Clone)]
pub struct Query {
    pub select: Select,
    pub distinct: bool,
    /// Emit the `agg = 0` marker that excludes summary rows.
    pub non_agg: bool,
    pub conds: Vec<Cond>,
    /// Sort key and direction; always paired with LIMIT 1.
    pub order: Option<(String, bool)>,
}

impl Query {
    pub fn sql(&self) -> String {
        let proj = match &self.select {
            Select::Column(c) if self.distinct => format!("DISTINCT {c}"),
            Select::Column(c) => c.clone(),
            Select::Agg(f, c) => format!("{f}({c})"),
            Select::CountStar => "COUNT(*)".into(),
            Select::CountDistinct(c) => format!("COUNT(DISTINCT {c})"),
        };
        let mut sql = format!("SELECT {proj} FROM w");
        let mut where_parts: Vec<String> = Vec::new();
        if self.non_agg {
            where_parts.push("agg = 0".into());
        }
        where_parts.extend(self.conds.iter().map(|c| format!("{} {} {}", c.column, c.op, c.literal.literal())));
        if !where_parts.is_empty() {
            sql.push_str(" WHERE ");
            sql.push_str(&where_parts.join(" AND "));
        }
        if let Some((col, desc)) = &self.order {
            sql.push_str(&format!(" ORDER BY {col} {} LIMIT 1", if *desc { "DESC" } else { "ASC" }));
        }
        sql
    }

    fn keep(&self, t: &SqlTable, i: usize) -> bool {
        if self.non_agg && t.agg[i] {
            return false;
        }
        self.conds.iter().all(|c| {
            let v = &t.rows[i][t.index(&c.column)];
            if *v == SqlVal::Null {
                return false;
            }
            let ord = sql_cmp(v, &c.literal);
            match c.op {
                "=" => ord == Ordering::Equal,
                "!=" => ord != Ordering::Equal,
                "<" => ord == Ordering::Less,
                "<=" => ord != Ordering::Greater,
                ">" => ord == Ordering::Greater,
                ">=" => ord != Ordering::Less,
                _ => unreachable!(),
            }
        })
    }

    /// Result rows of the single output column.
    pub fn run(&self, t: &SqlTable) -> Vec<SqlVal> {
        let mut ids: Vec<usize> = (0..t.rows.len()).filter(|&i| self.keep(t, i)).collect();
        let column = |name: &str, ids: &[usize]| -> Vec<SqlVal> {
            let c = t.index(name);
            ids.iter().map(|&i| t.rows[i][c].clone()).collect()
        };
        match &self.select {
            Select::Column(c) => {
                if let Some((key, desc)) = &self.order {
                    let keyed =
                        |i: usize| if key == "id" { SqlVal::Num(i as f64) } else { t.rows[i][t.index(key)].clone() };
                    ids.sort_by(|&a, &b| {
                        let o = sql_cmp(&keyed(a), &keyed(b));
                        if *desc {
                            o.reverse()
                        } else {
                            o
                        }
                    });
                    ids.truncate(1);
                }
                let mut vals = column(c, &ids);
                if self.distinct {
                    let mut seen = Vec::new();
                    vals.retain(|v| {
                        let fresh = !seen.contains(v);
                        if fresh {
                            seen.push(v.clone());
                        }
                        fresh
                    });
                }
                vals
            }
            Select::CountStar => vec![SqlVal::Num(ids.len() as f64)],
            Select::CountDistinct(c) => {
                let mut vals: Vec<SqlVal> = column(c, &ids).into_iter().filter(|v| *v != SqlVal::Null).collect();
                vals.sort_by(sql_cmp);
                vals.dedup();
                vec![SqlVal::Num(vals.len() as f64)]
            }
            Select::Agg(f, c) => {
                let vals: Vec<SqlVal> = column(c, &ids).into_iter().filter(|v| *v != SqlVal::Null).collect();
                let nums: Vec<f64> = vals.iter().filter_map(SqlVal::num).collect();
                let v = match *f {
                    "COUNT" => SqlVal::Num(vals.len() as f64),
                    _ if nums.is_empty() => SqlVal::Null,
                    "SUM" => SqlVal::Num(nums.iter().sum()),
                    "AVG" => SqlVal::Num(nums.iter().sum::<f64>() / nums.len() as f64),
                    "MIN" => SqlVal::Num(nums.iter().copied().fold(f64::INFINITY, f64::min)),
                    "MAX" => SqlVal::Num(nums.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    _ => unreachable!("{f}"),
                };
                vec![v]
            }
        }
    }

    fn is_sum(&self) -> bool {
        matches!(self.select, Select::Agg("SUM", _))
    }
}

pub fn answer_text(vals: &[SqlVal]) -> String {
    vals.iter().map(SqlVal::cell).collect::<Vec<_>>().join("|")
}

/// Compare a formula's answer with the SQL result on the same table. An
/// empty or NULL SQL result must come out as a formula error, or as 0 for
/// SUM, which has no NULL.
pub fn agrees(query: &Query, t: &SqlTable, formula: &str) -> Result<(), String> {
    let sheet = t.sheet();
    let want = query.run(t);
    let got = format_result(&execute_all(formula, &sheet));
    let sql_empty = want.is_empty() || want == [SqlVal::Null];
    let ok = if sql_empty {
        !got.is_valid() || (query.is_sum() && got.text == "0")
    } else {
        got.is_valid() && ordered_match(&normalize_answer(&got.text), &normalize_answer(&answer_text(&want)))
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{}\n  formula {formula} gave {:?} ({:?}); SQL gave {:?}", query.sql(), got.text, got.error, want))
    }
}

// ---- random tables and queries ----

const NAMES: [&str; 6] = ["ann", "bob", "cy", "dee", "eve", "fay"];
const CATS: [&str; 4] = ["a", "b", "c", "d"];

/// `c1` names, `c2` unique numbers, `c3` categories, `c4` small integers,
/// at columns A..D; sometimes a trailing summary row.
pub fn random_table<R: Rng>(rng: &mut R) -> SqlTable {
    let n = rng.gen_range(3..=12);
    let mut keys: Vec<f64> = (1..=n).map(|k| k as f64 * 1.5).collect();
    keys.shuffle(rng);
    let mut rows = Vec::new();
    for key in keys {
        rows.push(vec![
            SqlVal::Text(NAMES.choose(rng).unwrap().to_string()),
            SqlVal::Num(key),
            SqlVal::Text(CATS[..3].choose(rng).unwrap().to_string()),
            SqlVal::Num(rng.gen_range(0..=5) as f64),
        ]);
    }
    let mut agg = vec![false; n];
    if rng.gen_bool(0.3) {
        rows.push(vec![SqlVal::Text("total".into()), SqlVal::Num(1000.0), SqlVal::Text("a".into()), SqlVal::Num(99.0)]);
        agg.push(true);
    }
    let columns = [("c1", "A"), ("c2", "B"), ("c3", "C"), ("c4", "D")]
        .iter()
        .map(|(n, l)| (n.to_string(), l.to_string()))
        .collect();
    SqlTable { columns, rows, agg }
}

fn random_cond<R: Rng>(rng: &mut R) -> Cond {
    match rng.gen_range(0..4) {
        0 => Cond {
            column: "c3".into(),
            op: ["=", "!="].choose(rng).unwrap(),
            literal: SqlVal::Text(CATS.choose(rng).unwrap().to_string()),
        },
        1 => Cond { column: "c1".into(), op: "=", literal: SqlVal::Text(NAMES.choose(rng).unwrap().to_string()) },
        c => Cond {
            column: if c == 2 { "c2" } else { "c4" }.into(),
            op: ["=", "!=", "<", "<=", ">", ">="].choose(rng).unwrap(),
            literal: SqlVal::Num(rng.gen_range(0..=12) as f64),
        },
    }
}

/// A query from one of the supported templates.
pub fn random_query<R: Rng>(rng: &mut R, t: &SqlTable) -> Query {
    let non_agg = t.agg.iter().any(|a| *a);
    let conds = |rng: &mut R| -> Vec<Cond> { (0..rng.gen_range(1..=2)).map(|_| random_cond(rng)).collect() };
    let numeric = |rng: &mut R| -> String { ["c2", "c4"].choose(rng).unwrap().to_string() };
    let any_col = |rng: &mut R| -> String { ["c1", "c2", "c3", "c4"].choose(rng).unwrap().to_string() };
    let agg_fn = |rng: &mut R| -> &'static str { ["MIN", "MAX", "SUM", "AVG", "COUNT"].choose(rng).unwrap() };
    let base = Query { select: Select::CountStar, distinct: false, non_agg, conds: Vec::new(), order: None };
    match rng.gen_range(0..7) {
        0 => {
            let f = agg_fn(rng);
            let col = if f == "COUNT" { any_col(rng) } else { numeric(rng) };
            Query { select: Select::Agg(f, col), ..base }
        }
        1 => base,
        2 => Query { select: Select::CountDistinct(any_col(rng)), ..base },
        3 => {
            let select = match rng.gen_range(0..3) {
                0 => Select::CountStar,
                _ => {
                    let f = agg_fn(rng);
                    Select::Agg(f, if f == "COUNT" { any_col(rng) } else { numeric(rng) })
                }
            };
            Query { select, conds: conds(rng), ..base }
        }
        4 => Query { select: Select::Column(any_col(rng)), distinct: rng.gen_bool(0.3), conds: conds(rng), ..base },
        5 => Query { select: Select::Column(any_col(rng)), order: Some(("id".into(), rng.gen_bool(0.5))), ..base },
        _ => Query { select: Select::Column(any_col(rng)), order: Some(("c2".into(), rng.gen_bool(0.5))), ..base },
    }
}

/// Build a table from typed columns at given letters. `rows` holds data
/// rows; `summary` rows are appended with `agg = 1`.
pub fn fixture(columns: &[(&str, &str)], rows: Vec<Vec<SqlVal>>, summary: Vec<Vec<SqlVal>>) -> SqlTable {
    let n = rows.len();
    let m = summary.len();
    SqlTable {
        columns: columns.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        rows: rows.into_iter().chain(summary).collect(),
        agg: std::iter::repeat_n(false, n).chain(std::iter::repeat_n(true, m)).collect(),
    }
}
