#ifndef JOYCE_H
#define JOYCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JoyceStatus {
  JOYCE_STATUS_OK = 0,
  JOYCE_STATUS_NULL_POINTER = 1,
  JOYCE_STATUS_INVALID_STRING = 2,
  JOYCE_STATUS_PANIC = 3,
  JOYCE_STATUS_POLE = 10,
  JOYCE_STATUS_BRANCH_CUT = 11,
  JOYCE_STATUS_BRANCH_POINT = 12,
  JOYCE_STATUS_STRIP_VIOLATION = 13,
  JOYCE_STATUS_POLE_NEAR_CONTOUR = 14,
  JOYCE_STATUS_POLE_HIT = 15,
  JOYCE_STATUS_NON_INTEGER_BRANCH = 16,
  JOYCE_STATUS_BOUNDARY_ACTIVE = 17,
  JOYCE_STATUS_NO_ACTIVE_CLASSES = 18,
  JOYCE_STATUS_CUTOFF_TOO_SMALL = 19,
  JOYCE_STATUS_FINITENESS_UNDECIDABLE = 20,
  JOYCE_STATUS_NOT_UNCOUPLED = 21,
  JOYCE_STATUS_NOT_FINITE = 22,
  JOYCE_STATUS_ILL_CONDITIONED = 23,
  JOYCE_STATUS_ZERO_CENTRAL_CHARGE = 24,
  JOYCE_STATUS_DEGENERATE_FORM = 25,
  JOYCE_STATUS_DIMENSION = 26,
  JOYCE_STATUS_NOT_TAME = 27,
  JOYCE_STATUS_ON_DISCRIMINANT = 28,
  JOYCE_STATUS_ROOT_COLLISION = 29,
  JOYCE_STATUS_WALL = 30,
  JOYCE_STATUS_Q_ON_CYCLE = 31,
  JOYCE_STATUS_P_ZERO = 32,
  JOYCE_STATUS_JACOBIAN_SINGULAR = 33,
  JOYCE_STATUS_NEWTON_DIVERGED = 34,
  JOYCE_STATUS_REGION_UNSUPPORTED = 35,
  JOYCE_STATUS_INVALID_INPUT = 36,
} JoyceStatus;

// A point `(a, b)` of the A2 base.
typedef struct JoyceA2Point JoyceA2Point;

// A parsed BPS structure.
typedef struct JoyceStructure JoyceStructure;

typedef struct JoyceComplex {
  double re;
  double im;
} JoyceComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf`, NUL-terminated
// and truncated to `len` bytes. Returns the full message length plus one,
// or 0 when there is no error.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t joyce_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *joyce_version(void);

// Λ(w, η).
//
// # Safety
// `out` must be null or writable.
enum JoyceStatus joyce_lambda(struct JoyceComplex w,
                              struct JoyceComplex eta,
                              struct JoyceComplex *out);

// Li_k(x) on the principal branch.
//
// # Safety
// `out` must be null or writable.
enum JoyceStatus joyce_polylog(uint32_t k, struct JoyceComplex x, struct JoyceComplex *out);

// F(z | ω₁, ω₂) for the conifold.
//
// # Safety
// `out` must be null or writable.
enum JoyceStatus joyce_conifold_f(struct JoyceComplex z,
                                  struct JoyceComplex w1,
                                  struct JoyceComplex w2,
                                  struct JoyceComplex *out);

// G(z | ω₁, ω₂) for the conifold.
//
// # Safety
// `out` must be null or writable.
enum JoyceStatus joyce_conifold_g(struct JoyceComplex z,
                                  struct JoyceComplex w1,
                                  struct JoyceComplex w2,
                                  struct JoyceComplex *out);

// Parses a structure from its JSON file format.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` null or writable.
enum JoyceStatus joyce_structure_from_json(const char *json, struct JoyceStructure **out);

// # Safety
// `s` must be null or a handle from `joyce_structure_from_json`, freed once.
void joyce_structure_free(struct JoyceStructure *s);

// # Safety
// `s` must be a live handle; `out` null or writable.
enum JoyceStatus joyce_structure_rank(const struct JoyceStructure *s, size_t *out);

// Ω(γ) as a reduced fraction `num / den`, with γ given by `len` coordinates.
//
// # Safety
// `s` must be a live handle; `gamma` valid for `len` values; outputs writable.
enum JoyceStatus joyce_structure_omega(const struct JoyceStructure *s,
                                       const int64_t *gamma,
                                       size_t len,
                                       int64_t *num,
                                       int64_t *den);

// # Safety
// `out` must be null or writable.
enum JoyceStatus joyce_a2_point_new(struct JoyceComplex a,
                                    struct JoyceComplex b,
                                    struct JoyceA2Point **out);

// # Safety
// `p` must be null or a handle from `joyce_a2_point_new`, freed once.
void joyce_a2_point_free(struct JoyceA2Point *p);

// Periods of the canonical cycle basis, written to `out[0..2]`.
//
// # Safety
// `p` must be a live handle; `out` valid for two values.
enum JoyceStatus joyce_a2_periods(const struct JoyceA2Point *p, struct JoyceComplex *out);

// The Joyce form in period coordinates, row-major into `out[0..4]`, and
// its distance from the expected constant form.
//
// # Safety
// `p` must be a live handle; `out` valid for four values; `error` writable.
enum JoyceStatus joyce_a2_joyce_form(const struct JoyceA2Point *p,
                                     double tol,
                                     struct JoyceComplex *out,
                                     double *error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JOYCE_H */
