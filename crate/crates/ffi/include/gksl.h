#ifndef GKSL_H
#define GKSL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

// Result of a library call.
typedef enum GkslStatus {
  GKSL_STATUS_OK = 0,
  GKSL_STATUS_NULL_ARGUMENT = 1,
  GKSL_STATUS_INVALID_UTF8 = 2,
  GKSL_STATUS_PARSE = 3,
  GKSL_STATUS_INVALID_SPEC = 4,
  GKSL_STATUS_PRECONDITION = 5,
  GKSL_STATUS_INDEX_OUT_OF_RANGE = 6,
  GKSL_STATUS_SHAPE_MISMATCH = 7,
  GKSL_STATUS_INVALID_ARGUMENT = 8,
  GKSL_STATUS_IO = 9,
  GKSL_STATUS_PANIC = 10,
} GkslStatus;

// A kernel basis of `L`.
typedef struct GkslKernel GkslKernel;

// A parsed generator spec.
typedef struct GkslSpec GkslSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *gksl_version(void);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next library call on the same thread.
const char *gksl_last_error(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void gksl_string_free(char *s);

// Parses a spec from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum GkslStatus gksl_spec_from_json(const char *json, struct GkslSpec **out);

// Reads a spec file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum GkslStatus gksl_spec_read(const char *path, struct GkslSpec **out);

// Frees a spec. Null is ignored.
//
// # Safety
// `spec` must come from this library and not have been freed.
void gksl_spec_free(struct GkslSpec *spec);

// Hilbert-space dimension `N`, or 0 for a null handle.
//
// # Safety
// `spec` must be null or a live handle.
size_t gksl_spec_dim(const struct GkslSpec *spec);

// A spec handle serialized in the file format, as written by the CLI.
//
// # Safety
// `spec` must be a live handle and `out` a valid pointer.
enum GkslStatus gksl_spec_to_json(const struct GkslSpec *spec, char **out);

// SHA-256 of the normalized spec JSON, as 64 hex digits.
//
// # Safety
// `spec` must be a live handle and `out` a valid pointer.
enum GkslStatus gksl_spec_hash(const struct GkslSpec *spec, char **out);

// Checks complete positivity. `verdict` receives the overall result;
// `report_json`, if not null, receives the full validation report.
//
// # Safety
// `spec` must be a live handle, `verdict` a valid pointer and `report_json`
// null or valid.
enum GkslStatus gksl_validate(const struct GkslSpec *spec,
                              double tol,
                              bool *verdict,
                              char **report_json);

// Canonical form of a valid spec, as a new handle.
//
// # Safety
// `spec` must be a live handle and `out` a valid pointer.
enum GkslStatus gksl_canonicalize(const struct GkslSpec *spec, double tol, struct GkslSpec **out);

// Closed-form kernel. Fails with `InvalidSpec` for a non-generator and with
// `Precondition` when the generator is not pair-block-diagonal with diagonal `H`;
// use `gksl_oracle` then.
//
// # Safety
// `spec` must be a live handle and `out` a valid pointer.
enum GkslStatus gksl_kernel(const struct GkslSpec *spec, double tol, struct GkslKernel **out);

// Kernel from the numerical null space of the superoperator.
//
// # Safety
// `spec` must be a live handle and `out` a valid pointer.
enum GkslStatus gksl_oracle(const struct GkslSpec *spec, double tol, struct GkslKernel **out);

// Frees a kernel. Null is ignored.
//
// # Safety
// `kernel` must come from this library and not have been freed.
void gksl_kernel_free(struct GkslKernel *kernel);

// Number of basis elements, or 0 for a null handle.
//
// # Safety
// `kernel` must be null or a live handle.
size_t gksl_kernel_dim(const struct GkslKernel *kernel);

// Copies element `index` into `buf` as `N*N` row-major (re, im) pairs;
// `len` is the capacity of `buf` in doubles and must be at least `2*N*N`.
//
// # Safety
// `kernel` must be a live handle and `buf` valid for `len` doubles.
enum GkslStatus gksl_kernel_element(const struct GkslKernel *kernel,
                                    size_t index,
                                    double *buf,
                                    size_t len);

// The kernel in the CLI's JSON layout (1-based indices).
//
// # Safety
// `kernel` must be a live handle and `out` a valid pointer.
enum GkslStatus gksl_kernel_to_json(const struct GkslKernel *kernel, char **out);

// Largest principal angle (radians) between the spans of two kernels.
//
// # Safety
// `a` and `b` must be live handles and `out` a valid pointer.
enum GkslStatus gksl_max_principal_angle(const struct GkslKernel *a,
                                         const struct GkslKernel *b,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GKSL_H */
