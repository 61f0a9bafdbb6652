#ifndef BVALUE_H
#define BVALUE_H

/* C interface to the bias-aware interval library. Every call returns a status;
 * on failure bv_last_error() holds a message for the calling thread. Matrices
 * are row-major. Outputs are written only on BV_OK. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    BV_OK = 0,
    BV_DOMAIN = 1,
    BV_BRACKET = 2,
    BV_INTEGRATION = 3,
    BV_LINALG = 4,
    BV_DIMENSION = 5,
    BV_PRECONDITION = 6,
    BV_SINGULAR = 7,
    BV_CONTRACT = 8,
    BV_NULL_ARGUMENT = 20,
    BV_INTERNAL = 99
} bv_status;

typedef enum { BV_PW = 0, BV_PT = 1, BV_ST = 2 } bv_kind;
typedef enum { BV_TWO_SIDED = 0, BV_LOWER = 1 } bv_side;
typedef enum { BV_ZERO = 0, BV_FINITE = 1, BV_INFINITE = 2 } bv_bcase;
typedef enum { BV_SHRINK_SQRT_RATIO = 0, BV_SHRINK_RATIO = 1 } bv_shrinkage;

typedef struct bv_pair bv_pair;
typedef struct bv_multi bv_multi;
typedef struct bv_fusion bv_fusion;

const char* bv_last_error(void);
const char* bv_version(void);

/* Estimator pairs. rho != 0 is handled by decorrelating first; bias bounds are on
 * the original scale. */
bv_status bv_pair_create(double tau0_hat, double tau1_hat, double sigma0_sq, double sigma1_sq, double rho,
                         bv_pair** out);
void bv_pair_destroy(bv_pair* pair);

typedef struct {
    double center;
    double lower;
    double upper; /* +inf for a lower bound */
    double half_length_raw;
    double half_length_scaled;
    double worst_case_t;     /* relative bias; first coordinate for fusion */
    double worst_case_delta; /* the same bias in the units of tau1_hat - tau */
    double coverage;
    double std_error;
    int rounds;
    int ill_conditioned;
} bv_interval;

bv_status bv_point_estimate(const bv_pair* pair, bv_kind kind, double alpha, double* out);
bv_status bv_interval_solve(const bv_pair* pair, bv_kind kind, bv_side side, double b, double zeta, double alpha,
                            bv_interval* out);
bv_status bv_unbiased_interval(const bv_pair* pair, bv_side side, double zeta, bv_interval* out);

/* Standardized building blocks: half-length L and coverage at relative bias t. */
bv_status bv_half_length(bv_kind kind, bv_side side, double b, double zeta, double gamma, double alpha, double* L);
bv_status bv_coverage(bv_kind kind, bv_side side, double L, double t, double gamma, double alpha, double* out);

/* One interval per grid point; point_status[i] (optional) receives the status of
 * each point, and a failed point leaves out[i] zeroed. */
bv_status bv_curve(const bv_pair* pair, bv_kind kind, bv_side side, const double* b_grid, size_t n, double zeta,
                   double alpha, int threads, bv_interval* out, int* point_status);

typedef struct {
    double value; /* +inf when infinite */
    bv_bcase kase;
    double residual;
    double value_prime; /* b-value of the decorrelated pair */
    double scale;       /* |1 - rho sigma1 / sigma0| */
    int ill_conditioned;
} bv_bvalue;

bv_status bv_bvalue_compute(const bv_pair* pair, bv_kind kind, bv_side side, double zeta, double alpha,
                            bv_bvalue* out);
/* Same quantity through bisection on the interval half-lengths. */
bv_status bv_bvalue_by_curve(const bv_pair* pair, bv_kind kind, bv_side side, double zeta, double alpha,
                             bv_bvalue* out);

bv_status bv_decorrelate(const bv_pair* pair, bv_pair** out_prime, double* scale);

/* Multivariate problems. Sigma_scale may be NULL (Sigma0 is used). q <= 0 selects
 * the chi-squared (1 - alpha) quantile. */
bv_status bv_multi_create(int d, const double* tau0_hat, const double* tau1_hat, const double* Sigma0,
                          const double* Sigma1, const double* Sigma_scale, double q, double alpha,
                          bv_shrinkage shrinkage, bv_multi** out);
void bv_multi_destroy(bv_multi* problem);
int bv_multi_dim(const bv_multi* problem);
double bv_multi_threshold(const bv_multi* problem);

typedef struct {
    double M;
    double coverage;
    double std_error;
    int accuracy_warning;
    int rounds;
} bv_region;

/* center and worst_t (length d) are optional. */
bv_status bv_region_solve(const bv_multi* problem, bv_kind kind, const double* b, double zeta, bv_region* out,
                          double* center, double* worst_t);
/* Bias Delta = Sigma_scale^{1/2} t for a relative bias t. */
bv_status bv_multi_bias(const bv_multi* problem, const double* t, double* delta);

typedef struct {
    double radius;
    bv_bcase kase;
    double residual;
    int status; /* per-ray status; radius is NaN when not BV_OK */
} bv_ray;

/* Evenly spread directions over the positive quadrant: n_rays rows for d = 2
 * (out holds 2 * n_rays values), the single direction (1) for d = 1. */
bv_status bv_default_directions(int d, int n_rays, double* out);

/* directions: n rows of length d, nonnegative. */
bv_status bv_multi_surface(const bv_multi* problem, bv_kind kind, double zeta, const double* directions, size_t n,
                           int threads, bv_ray* out);

/* Fusion of one unbiased and K biased estimators. */
bv_status bv_fusion_create(double tau0_hat, double sigma0_sq, size_t K, const double* tau_hat,
                           const double* sigma_sq, bv_fusion** out);
void bv_fusion_destroy(bv_fusion* problem);
size_t bv_fusion_size(const bv_fusion* problem);
/* Bias Delta_j = sigma0 t_j for relative biases t. */
bv_status bv_fusion_bias(const bv_fusion* problem, const double* t, double* delta);

/* worst_t (length K) is optional. */
bv_status bv_fusion_solve(const bv_fusion* problem, bv_kind kind, const double* b, double zeta, double alpha,
                          bv_interval* out, double* worst_t);
bv_status bv_fusion_surface(const bv_fusion* problem, bv_kind kind, double zeta, double alpha,
                            const double* directions, size_t n, int threads, bv_ray* out);

/* Monte Carlo checks. */
typedef struct {
    size_t n_draws;
    uint64_t seed;
    int antithetic;
    int threads;
} bv_mc_config;

void bv_mc_config_default(bv_mc_config* cfg);

typedef struct {
    double value;
    double std_error;
    size_t n;
} bv_mc_estimate;

/* representation != 0 draws the error from its mixture form (rho must be 0). */
bv_status bv_mc_coverage_univariate(bv_kind kind, bv_side side, double sigma0_sq, double sigma1_sq, double rho,
                                    double delta, double half_length_scaled, double alpha, const bv_mc_config* cfg,
                                    int representation, bv_mc_estimate* out);
bv_status bv_mc_coverage_region(const bv_multi* problem, bv_kind kind, const double* delta, double M,
                                const bv_mc_config* cfg, bv_mc_estimate* out);
bv_status bv_mc_coverage_fusion(const bv_fusion* problem, bv_kind kind, const double* delta,
                                double half_length_scaled, double alpha, const bv_mc_config* cfg,
                                bv_mc_estimate* out);

#ifdef __cplusplus
}
#endif

#endif
