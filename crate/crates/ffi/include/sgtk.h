#ifndef SGTK_H
#define SGTK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/**
 * Tile-path multiply precision.
 */
typedef enum SgtkPrecision {
  SGTK_PRECISION_FP32 = 0,
  /**
   * Multiplicands rounded to a 10-bit mantissa on the tile path.
   */
  SGTK_PRECISION_TF32 = 1,
} SgtkPrecision;

/**
 * Result code of every fallible call.
 */
typedef enum SgtkStatus {
  SGTK_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  SGTK_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8, or a buffer had the wrong length.
   */
  SGTK_STATUS_INVALID_ARGUMENT = 2,
  SGTK_STATUS_IO = 3,
  /**
   * Malformed edge-list text or an id that does not fit in 32 bits.
   */
  SGTK_STATUS_PARSE = 4,
  /**
   * Malformed or inconsistent SGT1 data.
   */
  SGTK_STATUS_FORMAT = 5,
  /**
   * Structurally invalid graph input.
   */
  SGTK_STATUS_INVALID_GRAPH = 6,
  /**
   * Mismatched matrix or buffer shapes.
   */
  SGTK_STATUS_SHAPE = 7,
  /**
   * A parameter outside its allowed range, including tile geometry.
   */
  SGTK_STATUS_RANGE = 8,
  /**
   * A node without edges where degree normalization needs one.
   */
  SGTK_STATUS_DEGREE = 9,
  /**
   * A kernel produced NaN or infinity.
   */
  SGTK_STATUS_NON_FINITE = 10,
  /**
   * An internal panic was caught.
   */
  SGTK_STATUS_PANIC = 11,
} SgtkStatus;

/**
 * Opaque CSR graph.
 */
typedef struct SgtkGraph SgtkGraph;

/**
 * Opaque tiled transform of a graph.
 */
typedef struct SgtkTransformed SgtkTransformed;

/**
 * Block accounting of a transform.
 */
typedef struct SgtkBlockStats {
  uint64_t block_counter;
  /**
   * `block_counter * blk_h * blk_w`.
   */
  uint64_t capacity;
  uint64_t nnz;
  /**
   * `nnz / capacity`, 0 when there are no tiles.
   */
  double mean_tile_density;
} SgtkBlockStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *sgtk_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sgtk_version(void);

/**
 * Loads a `.mtx` (MatrixMarket) or whitespace-separated edge list.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SgtkStatus sgtk_graph_load(const char *path, struct SgtkGraph **out);

/**
 * Builds a graph from CSR arrays, which are copied. `node_pointer` has
 * `num_nodes + 1` entries; `values` may be NULL for an unweighted graph.
 *
 * # Safety
 * Each non-NULL array must hold the stated number of elements.
 */
enum SgtkStatus sgtk_graph_from_csr(size_t num_nodes,
                                    const uint64_t *node_pointer,
                                    const uint32_t *edge_list,
                                    const float *values,
                                    size_t num_edges,
                                    struct SgtkGraph **out);

/**
 * Node count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live graph handle.
 */
size_t sgtk_graph_num_nodes(const struct SgtkGraph *g);

/**
 * Edge count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live graph handle.
 */
size_t sgtk_graph_num_edges(const struct SgtkGraph *g);

/**
 * Copies the CSR arrays out. Either output pointer may be NULL to skip it;
 * `node_pointer` needs `num_nodes + 1` slots and `edge_list` `num_edges`.
 *
 * # Safety
 * `g` must be a live graph handle; non-NULL outputs must be large enough.
 */
enum SgtkStatus sgtk_graph_copy_csr(const struct SgtkGraph *g,
                                    uint64_t *node_pointer,
                                    uint32_t *edge_list);

/**
 * Returns a new graph with the requested normalization steps applied.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum SgtkStatus sgtk_graph_normalize(const struct SgtkGraph *g,
                                     bool symmetrize,
                                     bool add_self_loops,
                                     bool dedupe,
                                     struct SgtkGraph **out);

/**
 * Returns a copy whose edge values are `1 / sqrt(deg(r) * deg(c))`.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum SgtkStatus sgtk_graph_gcn_normalize(const struct SgtkGraph *g, struct SgtkGraph **out);

/**
 * # Safety
 * `g` must be NULL or a handle not yet freed.
 */
void sgtk_graph_free(struct SgtkGraph *g);

/**
 * Tiles `g` into `blk_h`-row windows and `blk_w`-column tiles.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum SgtkStatus sgtk_transform(const struct SgtkGraph *g,
                               size_t blk_h,
                               size_t blk_w,
                               struct SgtkTransformed **out);

/**
 * Same windows, recounted for tile width `blk_w`.
 *
 * # Safety
 * `t` must be a live transform handle; `out` must be writable.
 */
enum SgtkStatus sgtk_reblock(const struct SgtkTransformed *t,
                             size_t blk_w,
                             struct SgtkTransformed **out);

/**
 * # Safety
 * `t` must be a live transform handle; `out` must be writable.
 */
enum SgtkStatus sgtk_block_stats(const struct SgtkTransformed *t, struct SgtkBlockStats *out);

/**
 * Node count, or 0 for NULL.
 *
 * # Safety
 * `t` must be NULL or a live transform handle.
 */
size_t sgtk_transformed_num_nodes(const struct SgtkTransformed *t);

/**
 * Edge count, or 0 for NULL.
 *
 * # Safety
 * `t` must be NULL or a live transform handle.
 */
size_t sgtk_transformed_num_edges(const struct SgtkTransformed *t);

/**
 * Row-window count, or 0 for NULL.
 *
 * # Safety
 * `t` must be NULL or a live transform handle.
 */
size_t sgtk_transformed_num_windows(const struct SgtkTransformed *t);

/**
 * Writes an SGT1 file.
 *
 * # Safety
 * `t` must be a live transform handle; `path` a NUL-terminated string.
 */
enum SgtkStatus sgtk_save_sgt(const struct SgtkTransformed *t, const char *path);

/**
 * Reads and validates an SGT1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SgtkStatus sgtk_load_sgt(const char *path, struct SgtkTransformed **out);

/**
 * # Safety
 * `t` must be NULL or a handle not yet freed.
 */
void sgtk_transformed_free(struct SgtkTransformed *t);

/**
 * Neighbor aggregation `out = A x` with the graph's edge values.
 *
 * `x` is row-major `rows x cols` with `rows` equal to the node count; `out`
 * must hold exactly `rows * cols` floats. `split_ratio` in `[0, 1]` is the
 * fraction of each window's tiles taken by the dense-tile path.
 *
 * # Safety
 * `t` must be a live transform handle; buffers must match the lengths given.
 */
enum SgtkStatus sgtk_spmm(const struct SgtkTransformed *t,
                          const float *x,
                          size_t rows,
                          size_t cols,
                          double split_ratio,
                          enum SgtkPrecision precision_mode,
                          float *out,
                          size_t out_len);

/**
 * Edge features `out[e] = a_e * dot(x[row(e)], y[col(e)])` in CSR edge
 * order. `out` must hold exactly one float per edge.
 *
 * # Safety
 * `t` must be a live transform handle; buffers must match the lengths given.
 */
enum SgtkStatus sgtk_sddmm(const struct SgtkTransformed *t,
                           const float *x,
                           const float *y,
                           size_t rows,
                           size_t cols,
                           double split_ratio,
                           enum SgtkPrecision precision_mode,
                           float *out,
                           size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGTK_H */
