#ifndef HARVESTER_H
#define HARVESTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success; the others group the library errors.
 */
typedef enum HarvesterStatus {
  HARVESTER_STATUS_OK = 0,
  HARVESTER_STATUS_NULL_POINTER = 1,
  HARVESTER_STATUS_INVALID_PARAMETER = 2,
  HARVESTER_STATUS_INVALID_ARGUMENT = 3,
  HARVESTER_STATUS_SINGULAR = 4,
  HARVESTER_STATUS_NOT_CONVERGED = 5,
  HARVESTER_STATUS_OUT_OF_RANGE = 6,
  HARVESTER_STATUS_INTERNAL = 7,
} HarvesterStatus;

/**
 * A validated model.
 */
typedef struct HarvesterModel HarvesterModel;

/**
 * The result of a spectrum search.
 */
typedef struct HarvesterSpectrum HarvesterSpectrum;

typedef struct HarvesterParams {
  double m;
  double j;
  double s;
  double e;
  double g;
  double l;
  double k1;
  double k2;
  double cp;
  double r;
  double cd;
  double ci;
} HarvesterParams;

typedef struct HarvesterDerived {
  double d;
  double alpha;
  double beta;
  double gamma;
  double a1;
  double a2;
  double a3;
  double a4;
  double c1;
  double c2;
  double c3;
  double c4;
} HarvesterDerived;

typedef struct HarvesterComplex {
  double re;
  double im;
} HarvesterComplex;

typedef struct HarvesterDispersion {
  struct HarvesterComplex value;
  /**
   * Magnitude scale of the determinant; `|value| / condition` is scale free.
   */
  double condition;
  /**
   * Nonzero when lambda sits near the circuit pole.
   */
  int32_t near_pole;
} HarvesterDispersion;

typedef struct HarvesterBranchEigenvalue {
  struct HarvesterComplex unperturbed;
  struct HarvesterComplex correction;
  struct HarvesterComplex perturbed;
  /**
   * 1 admissible, 0 not admissible, -1 not applicable (branch 2).
   */
  int32_t admissible;
} HarvesterBranchEigenvalue;

/**
 * One eigenvalue of a computed spectrum.
 */
typedef struct HarvesterEigenvalue {
  struct HarvesterComplex value;
  double residual;
  /**
   * 1 or 2, or 0 when the root matched no asymptotic branch.
   */
  uint32_t branch;
  /**
   * Branch index, or 0 when unmatched.
   */
  uint32_t n;
  uint32_t multiplicity;
  /**
   * 1 admissible, 0 not admissible, -1 unknown.
   */
  int32_t admissible;
} HarvesterEigenvalue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *harvester_version(void);

/**
 * The message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library from the same thread.
 */
const char *harvester_last_error_message(void);

/**
 * The reference parameter set.
 */
struct HarvesterParams harvester_params_default(void);

/**
 * Validates `params` and stores a new model in `*out`. The two flags are
 * treated as booleans and enable the optional checks CI = -CD and
 * k2 > sqrt(GJ).
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum HarvesterStatus harvester_model_new(const struct HarvesterParams *params,
                                         int32_t require_balanced,
                                         int32_t require_branch1,
                                         struct HarvesterModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`harvester_model_new`] not yet freed.
 */
void harvester_model_free(struct HarvesterModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum HarvesterStatus harvester_derived_constants(const struct HarvesterModel *model,
                                                 struct HarvesterDerived *out);

/**
 * Evaluates the dispersion determinant at `lambda`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum HarvesterStatus harvester_dispersion(const struct HarvesterModel *model,
                                          struct HarvesterComplex lambda,
                                          struct HarvesterDispersion *out);

/**
 * Writes the six characteristic roots at `lambda` to `out[0..6]`.
 *
 * # Safety
 * `model` must be a live handle and `out` must point to six writable values.
 */
enum HarvesterStatus harvester_characteristic_roots(const struct HarvesterModel *model,
                                                    struct HarvesterComplex lambda,
                                                    struct HarvesterComplex *out);

/**
 * Leading-order eigenvalue of branch 1 or 2 with index `n`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum HarvesterStatus harvester_unperturbed_branch(const struct HarvesterModel *model,
                                                  uint32_t branch_number,
                                                  uint32_t n,
                                                  struct HarvesterComplex *out);

/**
 * First-order corrected eigenvalue of branch 1 or 2 with index `n`, using
 * the default admissibility and Newton settings.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum HarvesterStatus harvester_perturbed_branch(const struct HarvesterModel *model,
                                                uint32_t branch_number,
                                                uint32_t n,
                                                struct HarvesterBranchEigenvalue *out);

/**
 * Finds every eigenvalue in the rectangle `[re_min, re_max] × [im_min,
 * im_max]` with default solver settings. Roots left of the imaginary axis
 * are added by mirroring when `re_min >= 0`. A search that leaves boxes
 * unresolved still succeeds; check [`harvester_spectrum_unresolved`].
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum HarvesterStatus harvester_find_spectrum(const struct HarvesterModel *model,
                                             double re_min,
                                             double re_max,
                                             double im_min,
                                             double im_max,
                                             struct HarvesterSpectrum **out);

/**
 * Number of eigenvalues in a spectrum; 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t harvester_spectrum_len(const struct HarvesterSpectrum *spectrum);

/**
 * Number of boxes the search could not resolve; 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t harvester_spectrum_unresolved(const struct HarvesterSpectrum *spectrum);

/**
 * # Safety
 * `spectrum` must be a live handle and `out` a valid pointer.
 */
enum HarvesterStatus harvester_spectrum_get(const struct HarvesterSpectrum *spectrum,
                                            size_t index,
                                            struct HarvesterEigenvalue *out);

/**
 * # Safety
 * `spectrum` must be null or a handle not yet freed.
 */
void harvester_spectrum_free(struct HarvesterSpectrum *spectrum);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARVESTER_H */
