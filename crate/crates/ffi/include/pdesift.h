#ifndef PDESIFT_H
#define PDESIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PdsStatus {
  PDS_STATUS_OK = 0,
  // A required pointer argument was null.
  PDS_STATUS_NULL_POINTER = 1,
  // An argument was out of range or not valid UTF-8.
  PDS_STATUS_INVALID_ARGUMENT = 2,
  // A configuration or system specification was rejected.
  PDS_STATUS_CONFIG = 3,
  // The computation failed (solver instability, singular system, ...).
  PDS_STATUS_COMPUTATION = 4,
  // Reading or writing a file failed.
  PDS_STATUS_IO = 5,
  // An internal panic was caught at the boundary.
  PDS_STATUS_PANIC = 6,
} PdsStatus;

// A gridded field together with its snapshot metadata.
typedef struct PdsField PdsField;

// A discovered equation with its posterior summary.
typedef struct PdsModel PdsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf`.
//
// Returns the full message length; an empty message means the last call
// succeeded.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t pds_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *pds_version(void);

// Simulates a benchmark system (`heat1d`, `heat2d`, `burgers`, `kdv`, `ks`,
// `wave1d`) on its benchmark grid and adds Gaussian noise of relative
// `noise` level drawn from `seed`.
//
// # Safety
// `system` must be a NUL-terminated string; `out` must be valid for writes.
enum PdsStatus pds_simulate(const char *system, double noise, uint64_t seed, struct PdsField **out);

// Loads a field snapshot file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for writes.
enum PdsStatus pds_field_load(const char *path, struct PdsField **out);

// Writes a field snapshot file.
//
// # Safety
// `field` must be a live handle; `path` a NUL-terminated string.
enum PdsStatus pds_field_save(const struct PdsField *field, const char *path);

// Grid dimensions; `ny` is 1 for one-dimensional fields.
//
// # Safety
// `field` must be a live handle; the outputs must be valid for writes.
enum PdsStatus pds_field_shape(const struct PdsField *field, size_t *nt, size_t *nx, size_t *ny);

// Copies the values in row-major `(t, x, y)` order into `buf`, which must
// hold at least `nt * nx * ny` values.
//
// # Safety
// `field` must be a live handle; `buf` valid for `len` writes.
enum PdsStatus pds_field_values(const struct PdsField *field, double *buf, size_t len);

// Releases a field; null is ignored.
//
// # Safety
// `field` must be null or a handle not yet freed.
void pds_field_free(struct PdsField *field);

// Discovers the governing equation of `field`.
//
// Starts from the tuned benchmark settings of the field's system (library
// defaults for fields without a system tag). `config_json`, when not null,
// is a partial JSON fit configuration (`dict`, `deriv`, `vb`, `stridge`)
// whose fields override those settings. `seed` drives row subsampling.
//
// # Safety
// `field` must be a live handle; `config_json` null or NUL-terminated;
// `out` valid for writes.
enum PdsStatus pds_discover(const struct PdsField *field,
                            const char *config_json,
                            uint64_t seed,
                            struct PdsModel **out);

// Number of dictionary terms.
//
// # Safety
// `model` must be null or a live handle; null gives 0.
size_t pds_model_num_terms(const struct PdsModel *model);

// Label of term `index`, e.g. `u*u_x`.
//
// # Safety
// `model` must be a live handle; `buf` null or valid for `cap` bytes;
// `needed` null or valid for writes.
enum PdsStatus pds_model_label(const struct PdsModel *model,
                               size_t index,
                               char *buf,
                               size_t cap,
                               size_t *needed);

// Posterior inclusion probabilities, one per term.
//
// # Safety
// `model` must be a live handle; `buf` valid for `len` writes.
enum PdsStatus pds_model_pip(const struct PdsModel *model, double *buf, size_t len);

// Posterior mean coefficients, one per term, zero off the support.
//
// # Safety
// `model` must be a live handle; `buf` valid for `len` writes.
enum PdsStatus pds_model_mean(const struct PdsModel *model, double *buf, size_t len);

// Posterior standard deviations, one per term, zero off the support.
//
// # Safety
// `model` must be a live handle; `buf` valid for `len` writes.
enum PdsStatus pds_model_std(const struct PdsModel *model, double *buf, size_t len);

// The identified equation as text, e.g. `u_t = 2.000000 u_xx`.
//
// # Safety
// `model` must be a live handle; `buf` null or valid for `cap` bytes;
// `needed` null or valid for writes.
enum PdsStatus pds_model_equation(const struct PdsModel *model,
                                  char *buf,
                                  size_t cap,
                                  size_t *needed);

// The model in the JSON form written by `pdesift discover --out`.
//
// # Safety
// `model` must be a live handle; `buf` null or valid for `cap` bytes;
// `needed` null or valid for writes.
enum PdsStatus pds_model_json(const struct PdsModel *model, char *buf, size_t cap, size_t *needed);

// Releases a model; null is ignored.
//
// # Safety
// `model` must be null or a handle not yet freed.
void pds_model_free(struct PdsModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDESIFT_H */
