//! C ABI over the sheetqa core.
//!
//! Conventions:
//! * every fallible call returns a `SheetqaStatus`; `SHEETQA_STATUS_OK` is 0;
//! * results come back through out-pointers;
//! * strings returned to the caller are owned by the caller and must be
//!   released with `sheetqa_string_free`;
//! * tables are opaque handles released with `sheetqa_table_free`;
//! * after a failure `sheetqa_last_error` describes it (per thread).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use serde::Deserialize;

use sheetqa::answer::{denotation_match, normalize_answer, reward_cot, reward_fast};
use sheetqa::formula::ExecReport;
use sheetqa::sql::{convert_and_simplify, ColumnMap};
use sheetqa::table::{load_table, parse_table, render_plain, render_spreadsheet, ParseOptions, Table, TableFormat};
use sheetqa::vote::{collect_candidates, vote, Mode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetqaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    TableError = 4,
    SqlError = 5,
    NoValidCandidates = 6,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetqaFormat {
    Markdown = 0,
    Csv = 1,
    JsonGrid = 2,
}

/// Opaque table handle.
pub struct SheetqaTable {
    inner: Table,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type FfiResult<T> = Result<T, (SheetqaStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SheetqaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SheetqaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SheetqaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err((SheetqaStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SheetqaStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn table_arg<'a>(t: *const SheetqaTable) -> FfiResult<&'a Table> {
    t.as_ref().map(|t| &t.inner).ok_or((SheetqaStatus::NullPointer, "table is null".into()))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err((SheetqaStatus::NullPointer, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| (SheetqaStatus::InvalidArgument, "result contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn options(header_rows: i32) -> ParseOptions {
    ParseOptions { header_rows: usize::try_from(header_rows).ok(), ..ParseOptions::default() }
}

unsafe fn put_table(out: *mut *mut SheetqaTable, table: Table) -> FfiResult<()> {
    if out.is_null() {
        return Err((SheetqaStatus::NullPointer, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(SheetqaTable { inner: table }));
    Ok(())
}

/// Parse a table from source text. A negative `header_rows` keeps the
/// format's default.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_table_parse(
    source: *const c_char,
    format: SheetqaFormat,
    header_rows: i32,
    out: *mut *mut SheetqaTable,
) -> SheetqaStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        let format = match format {
            SheetqaFormat::Markdown => TableFormat::Markdown,
            SheetqaFormat::Csv => TableFormat::Csv,
            SheetqaFormat::JsonGrid => TableFormat::JsonGrid,
        };
        let t =
            parse_table(src, format, &options(header_rows)).map_err(|e| (SheetqaStatus::TableError, e.to_string()))?;
        put_table(out, t)
    })
}

/// Load a table file; the format follows the extension.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_table_load(
    path: *const c_char,
    header_rows: i32,
    out: *mut *mut SheetqaTable,
) -> SheetqaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let t = load_table(Path::new(path), &options(header_rows))
            .map_err(|e| (SheetqaStatus::TableError, e.to_string()))?;
        put_table(out, t)
    })
}

/// Release a table. Null is ignored.
///
/// # Safety
/// `table` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_table_free(table: *mut SheetqaTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Row and column counts.
///
/// # Safety
/// `table` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_table_shape(
    table: *const SheetqaTable,
    rows: *mut usize,
    cols: *mut usize,
) -> SheetqaStatus {
    guard(|| {
        let t = table_arg(table)?;
        if rows.is_null() || cols.is_null() {
            return Err((SheetqaStatus::NullPointer, "output pointer is null".into()));
        }
        *rows = t.n_rows();
        *cols = t.n_cols();
        Ok(())
    })
}

/// Render the plain view, or the labelled spreadsheet view when
/// `spreadsheet` is true.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_table_render(
    table: *const SheetqaTable,
    spreadsheet: bool,
    out: *mut *mut c_char,
) -> SheetqaStatus {
    guard(|| {
        let t = table_arg(table)?;
        let text = if spreadsheet {
            render_spreadsheet(t).map_err(|e| (SheetqaStatus::TableError, e.to_string()))?
        } else {
            render_plain(t)
        };
        put_string(out, text)
    })
}

/// Evaluate a formula and return the execution report as JSON. Formula
/// errors are reported inside the JSON, not through the status.
///
/// # Safety
/// `table` must be a live handle; `formula` a NUL-terminated string;
/// `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_exec(
    table: *const SheetqaTable,
    formula: *const c_char,
    out_json: *mut *mut c_char,
) -> SheetqaStatus {
    guard(|| {
        let t = table_arg(table)?;
        let f = str_arg(formula, "formula")?;
        let report = ExecReport::from_source(f, t);
        put_string(out_json, serde_json::to_string(&report).expect("serializable"))
    })
}

/// Convert SQL to a formula. `table` may be null to skip lookup
/// simplification. Writes `{formula, template_id, simplified}` JSON.
///
/// # Safety
/// String arguments must be NUL-terminated; `table` null or live;
/// `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_convert(
    sql: *const c_char,
    column_map_json: *const c_char,
    table: *const SheetqaTable,
    out_json: *mut *mut c_char,
) -> SheetqaStatus {
    guard(|| {
        let sql = str_arg(sql, "sql")?;
        let map: ColumnMap = serde_json::from_str(str_arg(column_map_json, "column_map_json")?)
            .map_err(|e| (SheetqaStatus::InvalidArgument, format!("column map: {e}")))?;
        let t = table.as_ref().map(|t| &t.inner);
        let out = convert_and_simplify(sql, &map, t).map_err(|e| (SheetqaStatus::SqlError, e.to_string()))?;
        put_string(out_json, serde_json::to_string(&out).expect("serializable"))
    })
}

/// Denotation match of two answer strings (`|` separates parts).
///
/// # Safety
/// Strings must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_answers_match(
    pred: *const c_char,
    gold: *const c_char,
    out: *mut bool,
) -> SheetqaStatus {
    guard(|| {
        let p = normalize_answer(str_arg(pred, "pred")?);
        let g = normalize_answer(str_arg(gold, "gold")?);
        if out.is_null() {
            return Err((SheetqaStatus::NullPointer, "output pointer is null".into()));
        }
        *out = denotation_match(&p, &g);
        Ok(())
    })
}

/// Reward for the direct variant: 1 or 0.
#[no_mangle]
pub extern "C" fn sheetqa_reward_fast(correct: bool) -> f64 {
    reward_fast(correct)
}

/// Reward for the reasoning variant: 1.5, 0.5 or 0.
#[no_mangle]
pub extern "C" fn sheetqa_reward_cot(format_ok: bool, correct: bool) -> f64 {
    reward_cot(format_ok, correct)
}

#[derive(Deserialize)]
struct CandidateIn {
    mode: Mode,
    output: String,
}

/// Vote over a JSON array of `{mode, output}` candidates (mode is
/// `"formula"` or `"dp"`). Writes the vote outcome as JSON.
///
/// # Safety
/// `table` must be a live handle; `candidates_json` NUL-terminated;
/// `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_vote(
    table: *const SheetqaTable,
    candidates_json: *const c_char,
    out_json: *mut *mut c_char,
) -> SheetqaStatus {
    guard(|| {
        let t = table_arg(table)?;
        let items: Vec<CandidateIn> = serde_json::from_str(str_arg(candidates_json, "candidates_json")?)
            .map_err(|e| (SheetqaStatus::InvalidArgument, format!("candidates: {e}")))?;
        let pick = |m: Mode| items.iter().filter(|c| c.mode == m).map(|c| c.output.clone()).collect::<Vec<_>>();
        let cands = collect_candidates(&pick(Mode::Formula), &pick(Mode::Dp), t);
        let outcome = vote(&cands).map_err(|e| (SheetqaStatus::NoValidCandidates, e.to_string()))?;
        put_string(out_json, serde_json::to_string(&outcome).expect("serializable"))
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sheetqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sheetqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sheetqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
