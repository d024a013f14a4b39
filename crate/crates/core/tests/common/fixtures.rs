//! Fixture tables shared by several test targets.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sheetqa::table::{load_table, ParseOptions, Table};

use super::sql_oracle::{fixture, Cond, Query, Select, SqlTable, SqlVal};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

pub const AGRIFOOD_TITLE: &str = "agri-food industry sub-groups for workers aged 15 years and over, 2011";

/// The four-region agri-food percentages table with three header rows.
pub fn agrifood() -> Table {
    load_table(&fixture_path("agrifood.json"), &ParseOptions::default()).expect("agri-food fixture loads")
}

/// One SQL/formula pair with the table it is checked on.
pub struct Table1Pair {
    pub sql: &'static str,
    pub formula: &'static str,
    /// The pair's formula is the simplified lookup, not the raw template.
    pub simplified: bool,
    pub query: Query,
    pub table: SqlTable,
}

fn num(n: f64) -> SqlVal {
    SqlVal::Num(n)
}

fn text(s: &str) -> SqlVal {
    SqlVal::Text(s.to_string())
}

fn query(select: Select) -> Query {
    Query { select, distinct: false, non_agg: false, conds: Vec::new(), order: None }
}

fn cond(column: &str, op: &'static str, literal: SqlVal) -> Cond {
    Cond { column: column.into(), op, literal }
}

/// The eight template examples, each with a table built so the SQL has a
/// definite answer under the stated column letters and row span.
pub fn table1_pairs() -> Vec<Table1Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pairs = Vec::new();

    // names in E, values in F; the looked-up name sits on sheet row 28
    let rows = (0..38)
        .map(|i| {
            let name = if i == 26 { "jaime quintana".to_string() } else { format!("player {i}") };
            vec![SqlVal::Text(name), num(rng.gen_range(1..100) as f64)]
        })
        .collect();
    pairs.push(Table1Pair {
        sql: "SELECT c4 FROM w WHERE c3 = 'jaime quintana'",
        formula: "=F28",
        simplified: true,
        query: Query { conds: vec![cond("c3", "=", text("jaime quintana"))], ..query(Select::Column("c4".into())) },
        table: fixture(&[("c3", "E"), ("c4", "F")], rows, vec![]),
    });

    let rows = (0..38).map(|i| vec![SqlVal::Text(format!("city {i}"))]).collect();
    pairs.push(Table1Pair {
        sql: "SELECT c2 FROM w ORDER BY id DESC LIMIT 1",
        formula: "=B39",
        simplified: false,
        query: Query { order: Some(("id".into(), true)), ..query(Select::Column("c2".into())) },
        table: fixture(&[("c2", "B")], rows, vec![]),
    });

    let values: Vec<f64> = (0..34).map(|_| rng.gen_range(10..500) as f64 / 4.0).collect();
    let total: f64 = values.iter().sum();
    pairs.push(Table1Pair {
        sql: "SELECT MIN(c3) FROM w WHERE agg = 0",
        formula: "=MIN(G2:G35)",
        simplified: false,
        query: Query { non_agg: true, ..query(Select::Agg("MIN", "c3".into())) },
        // the summary row is negative so an off-by-one range would change MIN
        table: fixture(&[("c3", "G")], values.iter().map(|v| vec![num(*v)]).collect(), vec![vec![num(-total)]]),
    });

    let rows = (0..35).map(|i| vec![SqlVal::Text(format!("team {}", i % 20))]).collect();
    pairs.push(Table1Pair {
        sql: "SELECT COUNT(*) FROM w WHERE agg = 0",
        formula: "=COUNTA(A2:A36)",
        simplified: false,
        query: Query { non_agg: true, ..query(Select::CountStar) },
        table: fixture(&[("c1", "A")], rows, vec![vec![text("total")]]),
    });

    let pool = ["usa", "canada", "mexico", "brazil", "chile", "peru", "cuba"];
    let rows = (0..38).map(|_| vec![text(pool.choose(&mut rng).unwrap())]).collect();
    pairs.push(Table1Pair {
        sql: "SELECT COUNT(DISTINCT c1) FROM w WHERE agg = 0",
        formula: "=COUNTA(UNIQUE(A2:A39))",
        simplified: false,
        query: Query { non_agg: true, ..query(Select::CountDistinct("c1".into())) },
        table: fixture(&[("c1", "A")], rows, vec![vec![text("total")]]),
    });

    let rows = (0..21)
        .map(|_| vec![num(*[58.0, 59.0, 60.0, 61.0].choose(&mut rng).unwrap()), num(rng.gen_range(1..1000) as f64)])
        .collect();
    pairs.push(Table1Pair {
        sql: "SELECT SUM(c4_number) FROM w WHERE c2_year = 60",
        formula: "=SUMIFS(N2:N22, G2:G22,\"=60\")",
        simplified: false,
        query: Query { conds: vec![cond("c2_year", "=", num(60.0))], ..query(Select::Agg("SUM", "c4_number".into())) },
        table: fixture(&[("c2_year", "G"), ("c4_number", "N")], rows, vec![]),
    });

    let rows = (0..32)
        .map(|_| {
            vec![
                num(rng.gen_range(1..200) as f64),
                text(["a", "b", "c"].choose(&mut rng).unwrap()),
                text(["a", "b", "c"].choose(&mut rng).unwrap()),
            ]
        })
        .collect();
    pairs.push(Table1Pair {
        sql: "SELECT MIN(c2) FROM w WHERE c3 = 'a' AND c4 != 'b'",
        formula: "=MINIFS(D2:D33, G2:G33,\"=a\", H2:H33,\"<>b\")",
        simplified: false,
        query: Query {
            conds: vec![cond("c3", "=", text("a")), cond("c4", "!=", text("b"))],
            ..query(Select::Agg("MIN", "c2".into()))
        },
        table: fixture(&[("c2", "D"), ("c3", "G"), ("c4", "H")], rows, vec![]),
    });

    let mut keys: Vec<f64> = (1..=12).map(|k| k as f64 * 7.0).collect();
    keys.shuffle(&mut rng);
    let rows = keys.iter().enumerate().map(|(i, k)| vec![SqlVal::Text(format!("runner {i}")), num(*k)]).collect();
    pairs.push(Table1Pair {
        sql: "SELECT c1 FROM w ORDER BY c2_parsed ASC LIMIT 1",
        formula: "=INDEX(A2:A13, MATCH(MIN(D2:D13),D2:D13,0))",
        simplified: false,
        query: Query { order: Some(("c2_parsed".into(), false)), ..query(Select::Column("c1".into())) },
        table: fixture(&[("c1", "A"), ("c2_parsed", "D")], rows, vec![]),
    });

    pairs
}
