#ifndef SHEETQA_H
#define SHEETQA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SheetqaFormat {
  SHEETQA_FORMAT_MARKDOWN = 0,
  SHEETQA_FORMAT_CSV = 1,
  SHEETQA_FORMAT_JSON_GRID = 2,
} SheetqaFormat;

typedef enum SheetqaStatus {
  SHEETQA_STATUS_OK = 0,
  SHEETQA_STATUS_NULL_POINTER = 1,
  SHEETQA_STATUS_INVALID_UTF8 = 2,
  SHEETQA_STATUS_INVALID_ARGUMENT = 3,
  SHEETQA_STATUS_TABLE_ERROR = 4,
  SHEETQA_STATUS_SQL_ERROR = 5,
  SHEETQA_STATUS_NO_VALID_CANDIDATES = 6,
  SHEETQA_STATUS_PANIC = 99,
} SheetqaStatus;

/**
 * Opaque table handle.
 */
typedef struct SheetqaTable SheetqaTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a table from source text. A negative `header_rows` keeps the
 * format's default.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum SheetqaStatus sheetqa_table_parse(const char *source,
                                       enum SheetqaFormat format,
                                       int32_t header_rows,
                                       struct SheetqaTable **out);

/**
 * Load a table file; the format follows the extension.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SheetqaStatus sheetqa_table_load(const char *path,
                                      int32_t header_rows,
                                      struct SheetqaTable **out);

/**
 * Release a table. Null is ignored.
 *
 * # Safety
 * `table` must come from this library and not be used afterwards.
 */
void sheetqa_table_free(struct SheetqaTable *table);

/**
 * Row and column counts.
 *
 * # Safety
 * `table` must be a live handle; the out-pointers must be writable.
 */
enum SheetqaStatus sheetqa_table_shape(const struct SheetqaTable *table,
                                       size_t *rows,
                                       size_t *cols);

/**
 * Render the plain view, or the labelled spreadsheet view when
 * `spreadsheet` is true.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
enum SheetqaStatus sheetqa_table_render(const struct SheetqaTable *table,
                                        bool spreadsheet,
                                        char **out);

/**
 * Evaluate a formula and return the execution report as JSON. Formula
 * errors are reported inside the JSON, not through the status.
 *
 * # Safety
 * `table` must be a live handle; `formula` a NUL-terminated string;
 * `out_json` writable.
 */
enum SheetqaStatus sheetqa_exec(const struct SheetqaTable *table,
                                const char *formula,
                                char **out_json);

/**
 * Convert SQL to a formula. `table` may be null to skip lookup
 * simplification. Writes `{formula, template_id, simplified}` JSON.
 *
 * # Safety
 * String arguments must be NUL-terminated; `table` null or live;
 * `out_json` writable.
 */
enum SheetqaStatus sheetqa_convert(const char *sql,
                                   const char *column_map_json,
                                   const struct SheetqaTable *table,
                                   char **out_json);

/**
 * Denotation match of two answer strings (`|` separates parts).
 *
 * # Safety
 * Strings must be NUL-terminated; `out` writable.
 */
enum SheetqaStatus sheetqa_answers_match(const char *pred, const char *gold, bool *out);

/**
 * Reward for the direct variant: 1 or 0.
 */
double sheetqa_reward_fast(bool correct);

/**
 * Reward for the reasoning variant: 1.5, 0.5 or 0.
 */
double sheetqa_reward_cot(bool format_ok, bool correct);

/**
 * Vote over a JSON array of `{mode, output}` candidates (mode is
 * `"formula"` or `"dp"`). Writes the vote outcome as JSON.
 *
 * # Safety
 * `table` must be a live handle; `candidates_json` NUL-terminated;
 * `out_json` writable.
 */
enum SheetqaStatus sheetqa_vote(const struct SheetqaTable *table,
                                const char *candidates_json,
                                char **out_json);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *sheetqa_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sheetqa_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *sheetqa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHEETQA_H */
