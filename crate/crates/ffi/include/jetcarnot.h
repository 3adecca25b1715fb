#ifndef JETCARNOT_H
#define JETCARNOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum JcStatus {
  JC_STATUS_OK = 0,
  JC_STATUS_NULL_POINTER = 1,
  JC_STATUS_INVALID_ARGUMENT = 2,
  JC_STATUS_DIMENSION_MISMATCH = 3,
  JC_STATUS_SHAPE_MISMATCH = 4,
  JC_STATUS_INCOMPATIBLE_PAIR = 5,
  JC_STATUS_ZERO_GAP = 6,
  JC_STATUS_INFEASIBLE_AT_BUDGET = 7,
  JC_STATUS_PARSE = 8,
  JC_STATUS_IO = 9,
  JC_STATUS_BUFFER_TOO_SMALL = 10,
  JC_STATUS_PANIC = 11,
  JC_STATUS_OTHER = 12,
} JcStatus;

// A boundary pair `(f0, f1)` at a dilation scale.
typedef struct JcBoundarySpec JcBoundarySpec;

// A scalar field on `R^n` given by a polynomial.
typedef struct JcField JcField;

// A point of `J^k(R^n)`.
typedef struct JcJetPoint JcJetPoint;

// Optimizer settings for the distance upper bounds.
typedef struct JcOptimizerOpts {
  size_t steps;
  size_t starts;
  uint64_t seed;
  double endpoint_tol;
  size_t max_iters;
} JcOptimizerOpts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` as a
// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
// message length excluding the terminator, or 0 when there is no error.
size_t jc_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *jc_version(void);

// Frees a string returned by this library. Null is ignored.
void jc_string_free(char *s);

// Default optimizer settings.
struct JcOptimizerOpts jc_optimizer_opts_default(void);

// Dimension of `J^k(R^n)`, written to `out_dim`.
enum JcStatus jc_jet_dim(size_t n, size_t k, size_t *out_dim);

// Builds a point from `len` coordinates in the layout `[x, u^k, ..., u^0]`.
enum JcStatus jc_jet_point_new(size_t n,
                               size_t k,
                               const double *coords,
                               size_t len,
                               struct JcJetPoint **out_point);

// Parses a JetPoint JSON document.
enum JcStatus jc_jet_point_from_json(const char *json, struct JcJetPoint **out_point);

// Serializes a point to JetPoint JSON. Free the result with [`jc_string_free`].
enum JcStatus jc_jet_point_to_json(const struct JcJetPoint *p, char **out_json);

// Frees a point. Null is ignored.
void jc_jet_point_free(struct JcJetPoint *p);

// Number of coordinates of `p`, or 0 when `p` is null.
size_t jc_jet_point_len(const struct JcJetPoint *p);

// Copies the coordinates of `p` into `buf`, which must hold `len` values.
enum JcStatus jc_jet_point_coords(const struct JcJetPoint *p, double *buf, size_t len);

// The dilation `delta_scale(p)`.
enum JcStatus jc_dilate(double scale, const struct JcJetPoint *p, struct JcJetPoint **out_point);

// Group product of two points of `J^1(R^n)`.
enum JcStatus jc_heisenberg_product(const struct JcJetPoint *p,
                                    const struct JcJetPoint *q,
                                    struct JcJetPoint **out_point);

// Parses a polynomial JSON document into a field.
enum JcStatus jc_field_from_json(const char *json, struct JcField **out_field);

// Frees a field. Null is ignored.
void jc_field_free(struct JcField *f);

// The k-jet prolongation `j^k f(x)`; `x` has `len == n` entries.
enum JcStatus jc_prolong(const struct JcField *f,
                         size_t k,
                         const double *x,
                         size_t len,
                         struct JcJetPoint **out_point);

// Lower bound on the Carnot distance from homogeneous coordinate gaps.
enum JcStatus jc_coordinate_lower_bound(const struct JcJetPoint *p,
                                        const struct JcJetPoint *q,
                                        double *out_value);

// Length of a horizontal curve from `p` to `q`. `opts` may be null for defaults.
enum JcStatus jc_cc_upper_bound(const struct JcJetPoint *p,
                                const struct JcJetPoint *q,
                                const struct JcOptimizerOpts *opts,
                                double *out_value);

// Upper bound on the Riemannian distance of `g0`. `opts` may be null for defaults.
enum JcStatus jc_r0_upper_bound(const struct JcJetPoint *p,
                                const struct JcJetPoint *q,
                                const struct JcOptimizerOpts *opts,
                                double *out_value);

// The canonical pair `f0 = 0`, `f1 = prod (x_i (1 - x_i))^{k+1}` at `scale`.
enum JcStatus jc_boundary_spec_canonical(size_t n,
                                         size_t k,
                                         double scale,
                                         struct JcBoundarySpec **out_spec);

// A pair of boundary-compatible fields at `scale`. The fields are copied.
enum JcStatus jc_boundary_spec_new(const struct JcField *f0,
                                   const struct JcField *f1,
                                   size_t k,
                                   double scale,
                                   struct JcBoundarySpec **out_spec);

// Frees a boundary spec. Null is ignored.
void jc_boundary_spec_free(struct JcBoundarySpec *s);

// `int (f0 - f1)` over the unit cube.
enum JcStatus jc_integral_gap(const struct JcBoundarySpec *spec, double *out_value);

// Certified lower bound on the Lipschitz constant of any extension.
enum JcStatus jc_certified_lower_bound(const struct JcBoundarySpec *spec, double *out_value);

// Integral of `omega` over the boundary image, fixed by the boundary data alone.
enum JcStatus jc_extension_boundary_value(const struct JcBoundarySpec *spec, double *out_value);

// Certified upper bound on the Lipschitz constant of the boundary map at
// scale one, from `per_axis` grid points.
enum JcStatus jc_lip_f_upper(const struct JcBoundarySpec *spec, size_t per_axis, double *out_value);

// Filling-volume constant `delta` for a Lipschitz bound `lip_f_upper`.
enum JcStatus jc_delta_constant(const struct JcBoundarySpec *spec,
                                double lip_f_upper,
                                double *out_value);

// Mass bound of the boundary cycle at dilation `scale`.
enum JcStatus jc_mass_upper(const struct JcBoundarySpec *spec,
                            double scale,
                            double lip_f_upper,
                            double *out_value);

// Lower bound on the mass of any filling of the boundary cycle at `scale`.
enum JcStatus jc_filling_lower(const struct JcBoundarySpec *spec, double scale, double *out_value);

// Smallest witness level at which a `lambda`-Lipschitz extension is impossible.
enum JcStatus jc_contradiction_level(size_t n,
                                     size_t k,
                                     double gap,
                                     double lambda,
                                     size_t *out_level);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JETCARNOT_H */
