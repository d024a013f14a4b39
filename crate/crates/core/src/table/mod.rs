//! Tables with mixed cell types and their two text views: the plain
//! pipe-delimited view and the spreadsheet view with column letters and row
//! numbers.

mod cell;
mod coord;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cell::{
    canonical_number, coerce_cell, date_parts, date_to_serial, parse_date, parse_number, serial_to_date, CellKind,
    CellValue,
};
pub use coord::{column_index, column_label, CellRef, MAX_LABELED_COLUMNS};

use crate::error::TableError;

/// Source formats accepted by [`parse_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFormat {
    Markdown,
    Csv,
    JsonGrid,
}

impl TableFormat {
    /// Guess from a file extension: `.json`, `.csv`, anything else is markdown.
    pub fn from_path(path: &Path) -> TableFormat {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
            Some("json") => TableFormat::JsonGrid,
            Some("csv") => TableFormat::Csv,
            _ => TableFormat::Markdown,
        }
    }

    fn name(self) -> &'static str {
        match self {
            TableFormat::Markdown => "markdown",
            TableFormat::Csv => "csv",
            TableFormat::JsonGrid => "json-grid",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub title: Option<String>,
    pub header_rows: Option<usize>,
    /// Inclusive 1-based data-row range, when summary rows are known.
    pub data_rows: Option<(usize, usize)>,
}

/// Immutable rectangular grid of typed cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    title: String,
    cells: Vec<Vec<CellValue>>,
    n_cols: usize,
    header_rows: usize,
    data_rows: (usize, usize),
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGrid {
    #[serde(default)]
    title: String,
    cells: Vec<Vec<serde_json::Value>>,
    #[serde(default)]
    header_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data_rows: Option<(usize, usize)>,
}

impl Table {
    /// Build a table from raw strings. Ragged rows are padded with empty cells.
    pub fn from_rows<S: AsRef<str>>(
        title: impl Into<String>,
        rows: &[Vec<S>],
        header_rows: usize,
    ) -> Result<Table, TableError> {
        Self::build(
            title.into(),
            rows.iter().map(|r| r.iter().map(|s| s.as_ref().to_string()).collect()).collect(),
            header_rows,
            None,
        )
    }

    fn build(
        title: String,
        rows: Vec<Vec<String>>,
        header_rows: usize,
        data_rows: Option<(usize, usize)>,
    ) -> Result<Table, TableError> {
        let n_cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        if rows.is_empty() || n_cols == 0 {
            return Err(TableError::EmptyTable);
        }
        let n_rows = rows.len();
        if header_rows >= n_rows {
            return Err(TableError::InvalidHeaderRows { header_rows, n_rows });
        }
        let data_rows = data_rows.unwrap_or((header_rows + 1, n_rows));
        if data_rows.0 < 1 || data_rows.0 > data_rows.1 || data_rows.1 > n_rows {
            return Err(TableError::InvalidDataRows { start: data_rows.0, end: data_rows.1, n_rows });
        }
        let cells = rows
            .into_iter()
            .map(|row| {
                let mut out: Vec<CellValue> = row.iter().map(|s| coerce_cell(s)).collect();
                out.resize(n_cols, CellValue::empty());
                out
            })
            .collect();
        Ok(Table { title, cells, n_cols, header_rows, data_rows })
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn header_rows(&self) -> usize {
        self.header_rows
    }

    /// Inclusive 1-based range of data rows.
    pub fn data_rows(&self) -> (usize, usize) {
        self.data_rows
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.cells
    }

    /// Cell by 1-based row and 0-based column.
    pub fn get(&self, row: usize, col: usize) -> Option<&CellValue> {
        if row == 0 {
            return None;
        }
        self.cells.get(row - 1).and_then(|r| r.get(col))
    }

    pub fn cell(&self, r: CellRef) -> Result<&CellValue, TableError> {
        self.get(r.row, r.col).ok_or_else(|| TableError::OutOfBounds(r.to_string()))
    }

    /// Serialize to the JSON grid format accepted by [`parse_table`].
    pub fn to_json_grid(&self) -> serde_json::Value {
        let grid = JsonGrid {
            title: self.title.clone(),
            cells: self
                .cells
                .iter()
                .map(|r| r.iter().map(|c| serde_json::Value::String(c.raw().to_string())).collect())
                .collect(),
            header_rows: self.header_rows,
            data_rows: Some(self.data_rows),
        };
        serde_json::to_value(grid).expect("grid serializes")
    }
}

/// Parse a table from markdown, CSV, or a JSON grid.
pub fn parse_table(source: &str, format: TableFormat, options: &ParseOptions) -> Result<Table, TableError> {
    let unparseable = |message: String| TableError::UnparseableSource { format: format.name(), message };
    if source.trim().is_empty() {
        return Err(TableError::EmptyTable);
    }
    let (title, rows, header_rows, data_rows) = match format {
        TableFormat::Markdown => {
            let rows = parse_markdown_rows(source).map_err(unparseable)?;
            (options.title.clone().unwrap_or_default(), rows, options.header_rows.unwrap_or(1), options.data_rows)
        }
        TableFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source.as_bytes());
            let mut rows = Vec::new();
            for rec in reader.records() {
                let rec = rec.map_err(|e| unparseable(e.to_string()))?;
                rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
            }
            (options.title.clone().unwrap_or_default(), rows, options.header_rows.unwrap_or(1), options.data_rows)
        }
        TableFormat::JsonGrid => {
            let grid: JsonGrid = serde_json::from_str(source).map_err(|e| unparseable(e.to_string()))?;
            let rows =
                grid.cells.into_iter().map(|r| r.into_iter().map(json_cell_to_raw).collect::<Vec<_>>()).collect();
            (
                options.title.clone().unwrap_or(grid.title),
                rows,
                options.header_rows.unwrap_or(grid.header_rows),
                options.data_rows.or(grid.data_rows),
            )
        }
    };
    Table::build(title, rows, header_rows, data_rows)
}

/// Read a table file, inferring the format from its extension.
pub fn load_table(path: &Path, options: &ParseOptions) -> Result<Table, TableError> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| TableError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_table(&source, TableFormat::from_path(path), options)
}

fn json_cell_to_raw(v: serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }
}

fn is_separator_row(cells: &[String]) -> bool {
    cells.iter().all(|c| {
        let t = c.trim();
        let t = t.strip_prefix(':').unwrap_or(t);
        let t = t.strip_suffix(':').unwrap_or(t);
        !t.is_empty() && t.chars().all(|ch| ch == '-')
    })
}

fn parse_markdown_rows(source: &str) -> Result<Vec<Vec<String>>, String> {
    let mut rows = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !line.contains('|') {
            return Err(format!("line {} has no cell delimiters", i + 1));
        }
        let inner = line.strip_prefix('|').unwrap_or(line);
        let inner = inner.strip_suffix('|').unwrap_or(inner);
        let cells: Vec<String> = inner.split('|').map(|c| c.trim().to_string()).collect();
        if is_separator_row(&cells) {
            continue;
        }
        rows.push(cells);
    }
    Ok(rows)
}

/// Plain view: one `|`-delimited line per row, raw strings verbatim.
pub fn render_plain(table: &Table) -> String {
    let mut out = String::new();
    for (i, row) in table.cells.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push('|');
        for c in row {
            out.push_str(c.raw());
            out.push('|');
        }
    }
    out
}

/// Spreadsheet view: a `|0|A|B|...|` header line, then each row prefixed with
/// its 1-based row number.
pub fn render_spreadsheet(table: &Table) -> Result<String, TableError> {
    if table.n_cols > MAX_LABELED_COLUMNS {
        return Err(TableError::TooManyColumns(table.n_cols));
    }
    let mut out = String::from("|0|");
    for c in 0..table.n_cols {
        out.push_str(&column_label(c));
        out.push('|');
    }
    for (i, row) in table.cells.iter().enumerate() {
        write!(out, "\n|{}|", i + 1).unwrap();
        for c in row {
            out.push_str(c.raw());
            out.push('|');
        }
    }
    Ok(out)
}

/// Look up a cell by an A1 coordinate such as `B4`.
pub fn cell_at<'t>(table: &'t Table, reference: &str) -> Result<&'t CellValue, TableError> {
    let r: CellRef = reference.parse()?;
    table.cell(r)
}
