/* C interface to the rotavg rotation-averaging library. */

#ifndef ROTAVG_H
#define ROTAVG_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C-API call. `Ok` is zero; everything else describes why the
 * requested value was not produced.
 */
typedef enum RotavgStatus {
  RotavgStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  RotavgStatus_NullArgument = 1,
  /**
   * Inputs failed validation (not a rotation / not unit / bad weights
   * or parameters).
   */
  RotavgStatus_InvalidInput = 2,
  /**
   * The nearest-rotation projection was not unique.
   */
  RotavgStatus_DegenerateProjection = 3,
  /**
   * The geodesic-mean iteration hit its iteration cap.
   */
  RotavgStatus_NoConvergence = 4,
  /**
   * The flow stagnated away from consensus; the reported average is the
   * projected mean of the stagnant population.
   */
  RotavgStatus_NonConsensus = 5,
  /**
   * The flow hit its time cap before converging.
   */
  RotavgStatus_MaxTimeExceeded = 6,
} RotavgStatus;

/**
 * Opaque dataset handle: rotations plus weights.
 */
typedef struct RotavgDataset RotavgDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a dataset from `count` row-major 3x3 rotation matrices
 * (`entries` holds `9 * count` doubles). `weights` may be null for the
 * unweighted case, otherwise it holds `count` nonnegative values.
 *
 * # Safety
 * `entries` must point to `9 * count` readable doubles, `weights` to
 * `count` readable doubles when non-null, and `out` must be writable.
 */
enum RotavgStatus rotavg_dataset_from_matrices(const double *entries,
                                               const double *weights,
                                               size_t count,
                                               struct RotavgDataset **out);

/**
 * Creates a dataset from `count` unit quaternions (`w x y z`, `4 * count`
 * doubles), mapped to rotations through the double cover.
 *
 * # Safety
 * `quaternions` must point to `4 * count` readable doubles, `weights` to
 * `count` readable doubles when non-null, and `out` must be writable.
 */
enum RotavgStatus rotavg_dataset_from_quaternions(const double *quaternions,
                                                  const double *weights,
                                                  size_t count,
                                                  struct RotavgDataset **out);

/**
 * Number of rotations in the dataset (0 for a null handle).
 *
 * # Safety
 * `dataset` must be null or a live handle from a `rotavg_dataset_*`
 * constructor.
 */
size_t rotavg_dataset_len(const struct RotavgDataset *dataset);

/**
 * Releases a dataset handle; null is a no-op.
 *
 * # Safety
 * `dataset` must be null or a live handle, and must not be used again.
 */
void rotavg_dataset_free(struct RotavgDataset *dataset);

/**
 * Weighted projected (chordal) mean; writes 9 doubles, row-major.
 *
 * # Safety
 * `dataset` must be a live handle; `out_matrix` must point to 9 writable
 * doubles.
 */
enum RotavgStatus rotavg_projected_mean(const struct RotavgDataset *dataset, double *out_matrix);

/**
 * Weighted geodesic (Karcher) mean. Pass `tolerance <= 0` or
 * `max_iterations == 0` to use the defaults (1e-10, 100).
 *
 * # Safety
 * `dataset` must be a live handle; `out_matrix` must point to 9 writable
 * doubles.
 */
enum RotavgStatus rotavg_geodesic_mean(const struct RotavgDataset *dataset,
                                       double tolerance,
                                       size_t max_iterations,
                                       double *out_matrix);

/**
 * Consensus-flow average (weighted when the dataset carries weights).
 * Pass non-positive `epsilon` / `delta` / `t_max` to use the defaults
 * (1e-5, 0.01, 1000). On `Ok`, `NonConsensus`, and `MaxTimeExceeded` the
 * average and (optionally) the termination time are written.
 *
 * # Safety
 * `dataset` must be a live handle; `out_matrix` must point to 9 writable
 * doubles; `out_time` must be null or point to a writable double.
 */
enum RotavgStatus rotavg_flow_average(const struct RotavgDataset *dataset,
                                      double epsilon,
                                      double delta,
                                      double t_max,
                                      double *out_matrix,
                                      double *out_time);

/**
 * Frobenius (chordal) distance between two rotations, each 9 row-major
 * doubles.
 *
 * # Safety
 * `a` and `b` must point to 9 readable doubles; `out` must be writable.
 */
enum RotavgStatus rotavg_chordal_distance(const double *a, const double *b, double *out);

/**
 * Geodesic distance (relative rotation angle, radians) between two
 * rotations, each 9 row-major doubles.
 *
 * # Safety
 * `a` and `b` must point to 9 readable doubles; `out` must be writable.
 */
enum RotavgStatus rotavg_geodesic_distance(const double *a, const double *b, double *out);

/**
 * Draws `count` rotations from the von Mises-Fisher distribution on the
 * quaternion sphere (mean direction `mu`, 4 doubles `w x y z`) pushed
 * through the double cover; writes `9 * count` row-major doubles.
 * Deterministic in `seed`.
 *
 * # Safety
 * `mu` must point to 4 readable doubles and `out_entries` to `9 * count`
 * writable doubles.
 */
enum RotavgStatus rotavg_sample_rotations(const double *mu,
                                          double kappa,
                                          size_t count,
                                          uint64_t seed,
                                          double *out_entries);

/**
 * Draws `count` uniform [0, 1) weights, deterministic in `seed`.
 *
 * # Safety
 * `out_weights` must point to `count` writable doubles.
 */
enum RotavgStatus rotavg_sample_weights(size_t count, uint64_t seed, double *out_weights);

/**
 * Static name of a status code.
 */
const char *rotavg_status_name(enum RotavgStatus status);

/**
 * Library version as a static string.
 */
const char *rotavg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTAVG_H */
