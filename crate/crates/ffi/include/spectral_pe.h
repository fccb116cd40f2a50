#ifndef SPECTRAL_PE_H
#define SPECTRAL_PE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpeStatus {
  SPE_OK = 0,
  SPE_ERR_NULL = 1,
  SPE_ERR_UTF8 = 2,
  SPE_ERR_PARSE = 3,
  SPE_ERR_BAD_PARAMS = 4,
  SPE_ERR_ISOLATED_NODE = 5,
  SPE_ERR_SHAPE = 6,
  SPE_ERR_NUMERIC = 7,
  SPE_ERR_IO = 8,
  SPE_ERR_MODEL = 9,
  SPE_ERR_BUFFER_TOO_SMALL = 10,
  SPE_ERR_PANIC = 11,
} SpeStatus;

/**
 * Opaque graph handle.
 */
typedef struct SpeGraph SpeGraph;

/**
 * Opaque model handle (SignNet or BasisNet).
 */
typedef struct SpeModel SpeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *spe_version(void);

/**
 * Message of the last failed call on this thread; valid until the next failing call.
 */
const char *spe_last_error(void);

/**
 * Parses an edge list or graph JSON document.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpeStatus spe_graph_parse(const char *text, struct SpeGraph **out);

/**
 * Builds a graph from `m` edges stored as `2m` node indices.
 *
 * # Safety
 * `edges` must point to `2 * m` values (or be null when `m == 0`); `out` must be valid.
 */
enum SpeStatus spe_graph_from_edges(size_t n, const size_t *edges, size_t m, struct SpeGraph **out);

/**
 * # Safety
 * `g` must come from a graph constructor and not be used afterwards; null is ignored.
 */
void spe_graph_free(struct SpeGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null; `n` must be valid.
 */
enum SpeStatus spe_graph_node_count(const struct SpeGraph *g, size_t *n);

/**
 * Ascending normalized-Laplacian eigenvalues.
 *
 * # Safety
 * `values` must hold `cap` doubles (or be null to query); `len` may be null.
 */
enum SpeStatus spe_laplacian_spectrum(const struct SpeGraph *g,
                                      double *values,
                                      size_t cap,
                                      size_t *len);

/**
 * Eigenspace dimensions of the normalized Laplacian, ascending by eigenvalue.
 *
 * Non-positive tolerances select the defaults.
 *
 * # Safety
 * As for [`spe_laplacian_spectrum`].
 */
enum SpeStatus spe_eigenspace_dims(const struct SpeGraph *g,
                                   double tol_abs,
                                   double tol_rel,
                                   size_t *dims,
                                   size_t cap,
                                   size_t *len);

/**
 * Numbers of 3-, 4- and 5-cycles, from the adjacency spectrum.
 *
 * # Safety
 * `out` must hold 3 values.
 */
enum SpeStatus spe_cycle_counts(const struct SpeGraph *g, uint64_t *out);

/**
 * Positional encoding described by a JSON config, e.g. `{"kind":"heat_diag","ts":[1.0]}`.
 * Row-major output of shape `rows x cols`.
 *
 * # Safety
 * `config_json` must be NUL-terminated; `out` must hold `cap` doubles or be null.
 */
enum SpeStatus spe_positional_encoding(const struct SpeGraph *g,
                                       const char *config_json,
                                       double *out,
                                       size_t cap,
                                       size_t *rows,
                                       size_t *cols);

/**
 * Loads a model checkpoint from a file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid.
 */
enum SpeStatus spe_model_load(const char *path, struct SpeModel **out);

/**
 * Parses a model checkpoint from a JSON string.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be valid.
 */
enum SpeStatus spe_model_from_json(const char *json, struct SpeModel **out);

/**
 * # Safety
 * `m` must come from a model constructor and not be used afterwards; null is ignored.
 */
void spe_model_free(struct SpeModel *m);

/**
 * Evaluates the model on the graph's normalized-Laplacian eigenvectors.
 *
 * SignNets use the first `k` eigenvectors (`k == 0` for all); BasisNets use every
 * eigenspace. Graph node features, if any, are passed as `X`.
 *
 * # Safety
 * Handles must be live; `out` must hold `cap` doubles or be null.
 */
enum SpeStatus spe_model_forward(const struct SpeModel *m,
                                 const struct SpeGraph *g,
                                 size_t k,
                                 double *out,
                                 size_t cap,
                                 size_t *rows,
                                 size_t *cols);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRAL_PE_H */
