#ifndef UCQ_H
#define UCQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum {
  UCQ_STATUS_OK = 0,
  UCQ_STATUS_NULL_POINTER = 1,
  UCQ_STATUS_INVALID_UTF8 = 2,
  UCQ_STATUS_PARSE_ERROR = 3,
  UCQ_STATUS_SIGNATURE_ERROR = 4,
  UCQ_STATUS_CAP_EXCEEDED = 5,
  UCQ_STATUS_PRECONDITION = 6,
  UCQ_STATUS_INVALID_INPUT = 7,
  UCQ_STATUS_PANIC = 8,
} UcqStatus;

/**
 * A parsed complex file.
 */
typedef struct UcqComplex UcqComplex;

/**
 * A parsed database file.
 */
typedef struct UcqDatabase UcqDatabase;

/**
 * A parsed query file.
 */
typedef struct UcqQuery UcqQuery;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a query file; `*out` receives a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
UcqStatus ucq_query_parse(const char *text, UcqQuery **out);

/**
 * # Safety
 * `q` must come from `ucq_query_parse` and not be used afterwards. Null is ignored.
 */
void ucq_query_free(UcqQuery *q);

/**
 * Parses a database file; `*out` receives a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
UcqStatus ucq_database_parse(const char *text, UcqDatabase **out);

/**
 * # Safety
 * `d` must come from `ucq_database_parse` and not be used afterwards. Null is ignored.
 */
void ucq_database_free(UcqDatabase *d);

/**
 * Parses a complex file; `*out` receives a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
UcqStatus ucq_complex_parse(const char *text, UcqComplex **out);

/**
 * # Safety
 * `c` must come from `ucq_complex_parse` and not be used afterwards. Null is ignored.
 */
void ucq_complex_free(UcqComplex *c);

/**
 * Number of answers as a decimal string.
 *
 * # Safety
 * Handles must be live; `out` must be a valid pointer.
 */
UcqStatus ucq_count(const UcqQuery *q, const UcqDatabase *d, char **out);

/**
 * Linear-time verdict for a quantifier-free UCQ.
 *
 * # Safety
 * `q` must be live; `out` must be a valid pointer.
 */
UcqStatus ucq_meta(const UcqQuery *q, bool *out);

/**
 * # Safety
 * `q` must be live; `out` must be a valid pointer.
 */
UcqStatus ucq_wl_dimension(const UcqQuery *q, size_t *out);

/**
 * Expansion table as JSON. `core_mode` selects grouping by #cores.
 *
 * # Safety
 * `q` must be live; `out` must be a valid pointer.
 */
UcqStatus ucq_expand_json(const UcqQuery *q, bool core_mode, char **out);

/**
 * # Safety
 * `c` must be live; `out` must be a valid pointer.
 */
UcqStatus ucq_complex_euler(const UcqComplex *c, int64_t *out);

/**
 * Reduces a complex. On the UCQ branch `*out_is_ucq` is true and `*out_text`
 * holds a query file; otherwise `*out_euler` holds the value and
 * `*out_text` is set to null.
 *
 * # Safety
 * `c` must be live; all output pointers must be valid.
 */
UcqStatus ucq_complex_reduce(const UcqComplex *c,
                             size_t t,
                             bool *out_is_ucq,
                             int64_t *out_euler,
                             char **out_text);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is ignored.
 */
void ucq_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *ucq_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UCQ_H */
