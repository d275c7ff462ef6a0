#ifndef MATSUBARA_H
#define MATSUBARA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MtsFormat {
  MTS_FORMAT_TEXT = 0,
  MTS_FORMAT_LATEX = 1,
  MTS_FORMAT_JSON = 2,
} MtsFormat;

typedef enum MtsStatus {
  MTS_STATUS_OK = 0,
  MTS_STATUS_NULL_POINTER = 1,
  MTS_STATUS_INVALID_UTF8 = 2,
  MTS_STATUS_INVALID_GRAPH = 3,
  MTS_STATUS_INVALID_ARGUMENT = 4,
  MTS_STATUS_SYMBOLIC = 5,
  MTS_STATUS_ENGINE = 6,
  MTS_STATUS_ORACLE = 7,
  MTS_STATUS_PANIC = 8,
} MtsStatus;

typedef enum MtsSumMethod {
  MTS_SUM_METHOD_OPERATOR = 0,
  MTS_SUM_METHOD_DIRECT = 1,
} MtsSumMethod;

// A canonical expression together with the graph data needed to evaluate
// and print it.
typedef struct MtsExpression MtsExpression;

// A validated Matsubara graph.
typedef struct MtsGraph MtsGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *mts_last_error(void);

// Library version as a static NUL-terminated string.
const char *mts_version(void);

// Parses and validates a graph given as JSON
// (`{"vertices": [...], "edges": [{"id", "from", "to"}, ...]}`).
//
// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum MtsStatus mts_graph_from_json(const char *json, struct MtsGraph **out);

// # Safety
// `graph` must come from [`mts_graph_from_json`] and not be used afterwards.
void mts_graph_free(struct MtsGraph *graph);

// Vertex count, line count, cycle rank and spanning-tree count.
//
// # Safety
// `graph` must be a live handle; each out pointer must be writable or NULL.
enum MtsStatus mts_graph_counts(const struct MtsGraph *graph,
                                size_t *vertices,
                                size_t *lines,
                                size_t *cycle_rank,
                                uint64_t *trees);

// Text rendering of the thermal operator, cutset-reduced unless `full`.
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum MtsStatus mts_graph_operator(const struct MtsGraph *graph, bool full, char **out);

// The Matsubara integral `I_G`.
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum MtsStatus mts_integral(const struct MtsGraph *graph, struct MtsExpression **out);

// The Matsubara sum `S_G`.
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum MtsStatus mts_sum(const struct MtsGraph *graph,
                       enum MtsSumMethod method,
                       struct MtsExpression **out);

// # Safety
// `expr` must come from this library and not be used afterwards.
void mts_expression_free(struct MtsExpression *expr);

// Number of canonical terms.
//
// # Safety
// `expr` must be a live handle; `out` must be writable.
enum MtsStatus mts_expression_term_count(const struct MtsExpression *expr, size_t *out);

// Canonical equality of two expressions.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum MtsStatus mts_expression_equal(const struct MtsExpression *a,
                                    const struct MtsExpression *b,
                                    bool *out);

// Renders as text, LaTeX or JSON.
//
// # Safety
// `expr` must be a live handle; `out` must be writable.
enum MtsStatus mts_expression_render(const struct MtsExpression *expr,
                                     enum MtsFormat format,
                                     char **out);

// Evaluates at `q` (one value per line, ascending line id) and `n` (one
// integer per non-root vertex, in declaration order).
//
// # Safety
// `q` and `n` must point to `q_len` and `n_len` readable values; `re` and
// `im` must be writable.
enum MtsStatus mts_expression_eval(const struct MtsExpression *expr,
                                   const double *q,
                                   size_t q_len,
                                   const int64_t *n,
                                   size_t n_len,
                                   double *re,
                                   double *im);

// Compares `S_G` with brute-force lattice sums at `trials` seeded points.
// Reports the number of failing trials and the largest relative error.
//
// # Safety
// `graph` must be a live handle; out pointers must be writable.
enum MtsStatus mts_verify_sum(const struct MtsGraph *graph,
                              size_t trials,
                              int64_t cutoff,
                              double tolerance,
                              uint64_t seed,
                              size_t *failures,
                              double *max_rel_error);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void mts_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATSUBARA_H */
