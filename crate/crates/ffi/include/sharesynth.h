#ifndef SHARESYNTH_H
#define SHARESYNTH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SS_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SS_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad configuration, parameters or workload.
   */
  SS_STATUS_CONFIG = 3,
  /**
   * Malformed dataset or domain file.
   */
  SS_STATUS_INGESTION = 4,
  /**
   * File could not be read or written.
   */
  SS_STATUS_IO = 5,
  /**
   * Protocol failure inside the library.
   */
  SS_STATUS_INTERNAL = 6,
  /**
   * The library panicked; the handle arguments are left untouched.
   */
  SS_STATUS_PANIC = 7,
} SsStatus;

/**
 * Opaque dataset handle.
 */
typedef struct SsDataset SsDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ss_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *ss_last_error_message(void);

/**
 * Loads a CSV file against a domain JSON file.
 *
 * # Safety
 * `csv_path` and `domain_path` must be NUL-terminated strings and `out` a
 * valid pointer to writable storage.
 */
enum SsStatus ss_dataset_load(const char *csv_path,
                              const char *domain_path,
                              struct SsDataset **out);

/**
 * Writes a dataset as CSV.
 *
 * # Safety
 * `data` must be a live handle and `path` a NUL-terminated string.
 */
enum SsStatus ss_dataset_save(const struct SsDataset *data, const char *path);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void ss_dataset_free(struct SsDataset *data);

/**
 * Number of rows; 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live handle.
 */
size_t ss_dataset_rows(const struct SsDataset *data);

/**
 * Number of attributes; 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live handle.
 */
size_t ss_dataset_cols(const struct SsDataset *data);

/**
 * Category index of one cell.
 *
 * # Safety
 * `data` must be a live handle and `out` valid writable storage.
 */
enum SsStatus ss_dataset_get(const struct SsDataset *data, size_t row, size_t col, uint32_t *out);

/**
 * Runs the synthesizer on `data`. `config_json` is an object with optional
 * keys `workload` ("all-2way", a workload file path, or an inline
 * `{"queries": [...]}` object), `epsilon`, `delta`, `rounds`, `algo`,
 * `noise`, `partition`, `backend` and `seed`, defaulting as the CLI does.
 * On success `out` receives a new handle and, when `log_out` is not null,
 * `*log_out` receives the run log as JSON.
 *
 * # Safety
 * `data` must be a live handle, `config_json` a NUL-terminated string, `out`
 * valid writable storage, and `log_out` null or valid writable storage.
 */
enum SsStatus ss_generate(const struct SsDataset *data,
                          const char *config_json,
                          struct SsDataset **out,
                          char **log_out);

/**
 * Workload error over all 1-way and 2-way marginals.
 *
 * # Safety
 * Both handles must be live and `out` valid writable storage.
 */
enum SsStatus ss_workload_error(const struct SsDataset *real,
                                const struct SsDataset *synth,
                                double *out);

/**
 * Frees a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void ss_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHARESYNTH_H */
