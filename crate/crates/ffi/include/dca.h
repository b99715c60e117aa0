#ifndef DCA_H
#define DCA_H

#include <stddef.h>
#include <stdint.h>

/**
 * Dense-regime or dilute-regime critical branch of the O(N) model.
 */
typedef enum DcaRegime {
  DCA_REGIME_DENSE = 0,
  DCA_REGIME_DILUTE = 1,
} DcaRegime;

/**
 * Result of every call.
 */
typedef enum DcaStatus {
  DCA_STATUS_OK = 0,
  DCA_STATUS_NULL_POINTER = 1,
  DCA_STATUS_INVALID_INPUT = 2,
  DCA_STATUS_BUDGET = 3,
  DCA_STATUS_NUMERICAL = 4,
  DCA_STATUS_PANIC = 5,
} DcaStatus;

/**
 * A lattice domain.
 */
typedef struct DcaDomain DcaDomain;

/**
 * Complex values indexed by mid-edge id.
 */
typedef struct DcaField DcaField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static nul-terminated string.
 */
const char *dca_version(void);

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread.
 */
const char *dca_last_error(void);

/**
 * Builds a domain from a JSON spec such as
 * `{"kind":"square","cellsX":3,"cellsY":2,"mesh":1.0,"a":0,"b":4}`.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` writable.
 */
enum DcaStatus dca_domain_from_json(const char *spec, struct DcaDomain **out);

/**
 * # Safety
 * `domain` must come from [`dca_domain_from_json`] and not be used after.
 */
void dca_domain_free(struct DcaDomain *domain);

/**
 * Vertex, edge, face and port counts.
 *
 * # Safety
 * `domain` must be a live handle; the outputs must be writable.
 */
enum DcaStatus dca_domain_counts(const struct DcaDomain *domain,
                                 size_t *vertices,
                                 size_t *edges,
                                 size_t *faces,
                                 size_t *ports);

/**
 * Fermionic observable at edge weight `x`, from the marked port `a`, by
 * enumeration of at most `2^budget_log2` configurations.
 *
 * # Safety
 * `domain` must be a live handle and `out` writable.
 */
enum DcaStatus dca_ising_observable(const struct DcaDomain *domain,
                                    double x,
                                    uint32_t budget_log2,
                                    struct DcaField **out);

/**
 * Solution of the discrete Riemann boundary value problem between the
 * marked ports.
 *
 * # Safety
 * `domain` must be a live handle and `out` writable.
 */
enum DcaStatus dca_riemann_bvp(const struct DcaDomain *domain, struct DcaField **out);

/**
 * # Safety
 * `field` must come from this library and not be used after.
 */
void dca_field_free(struct DcaField *field);

/**
 * Number of mid-edges.
 *
 * # Safety
 * `field` must be a live handle and `len` writable.
 */
enum DcaStatus dca_field_len(const struct DcaField *field, size_t *len);

/**
 * Value at mid-edge `index`.
 *
 * # Safety
 * `field` must be a live handle; `re` and `im` writable.
 */
enum DcaStatus dca_field_get(const struct DcaField *field, size_t index, double *re, double *im);

/**
 * Largest strong-relation residual of `field` over all corners.
 *
 * # Safety
 * Both handles must be live, the field built on this domain, and `out`
 * writable.
 */
enum DcaStatus dca_strong_residual(const struct DcaDomain *domain,
                                   const struct DcaField *field,
                                   double *out);

/**
 * Self-avoiding walk counts `C(1..=kmax)` written to `counts`, which must
 * hold `kmax` entries.
 *
 * # Safety
 * `counts` must point to `kmax` writable `u64`s.
 */
enum DcaStatus dca_saw_count(size_t kmax, uint64_t *counts);

/**
 * Critical edge weight and spin of the O(N) model for `n ∈ [0, 2]`.
 *
 * # Safety
 * `x` and `spin` must be writable.
 */
enum DcaStatus dca_on_critical(double n, enum DcaRegime regime, double *x, double *spin);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCA_H */
