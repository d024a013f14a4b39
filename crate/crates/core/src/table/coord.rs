//! A1-style coordinates: column letters and 1-based row numbers.

use std::fmt;
use std::str::FromStr;

use crate::error::TableError;

/// Columns addressable with at most two letters (A..ZZ).
pub const MAX_LABELED_COLUMNS: usize = 702;

/// Spreadsheet label for a 0-based column index: 0 → `A`, 25 → `Z`, 26 → `AA`.
pub fn column_label(index: usize) -> String {
    let mut n = index + 1;
    let mut out = Vec::new();
    while n > 0 {
        let rem = (n - 1) % 26;
        out.push(b'A' + rem as u8);
        n = (n - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

/// 0-based column index for a label, case-insensitive. `None` for non-letters.
pub fn column_index(label: &str) -> Option<usize> {
    if label.is_empty() || label.len() > 3 {
        return None;
    }
    let mut n: usize = 0;
    for c in label.chars() {
        if !c.is_ascii_alphabetic() {
            return None;
        }
        n = n * 26 + (c.to_ascii_uppercase() as u8 - b'A' + 1) as usize;
    }
    Some(n - 1)
}

/// A cell coordinate. `col` is 0-based, `row` is 1-based as displayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRef {
    pub col: usize,
    pub row: usize,
}

impl CellRef {
    pub fn new(col: usize, row: usize) -> Self {
        CellRef { col, row }
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", column_label(self.col), self.row)
    }
}

impl FromStr for CellRef {
    type Err = TableError;

    /// Accepts `B4`, `b4` and absolute forms like `$B$4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TableError::BadReference(s.to_string());
        let t = s.trim();
        let t = t.strip_prefix('$').unwrap_or(t);
        let split = t.find(|c: char| !c.is_ascii_alphabetic()).ok_or_else(bad)?;
        let (letters, rest) = t.split_at(split);
        let rest = rest.strip_prefix('$').unwrap_or(rest);
        if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let col = column_index(letters).ok_or_else(bad)?;
        let row: usize = rest.parse().map_err(|_| bad())?;
        if row == 0 {
            return Err(bad());
        }
        Ok(CellRef { col, row })
    }
}
