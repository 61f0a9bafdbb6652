#pragma once

// Special functions, quadrature, root finding and minimisation shared by the
// coverage and solver layers. Everything here is a pure function.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace bval {

struct Tolerance {
    double abs_tol = 1e-10;
    int max_iter = 200;

    static Tolerance integral() { return {1e-10, 2000}; }
    static Tolerance root() { return {1e-8, 200}; }
    void validate() const;
};

struct QmcConfig {
    std::size_t n_points = 65536;  // power of two, split over the replicates
    std::uint64_t seed = 42;
    std::size_t dim = 1;
    std::size_t replicates = 8;
    void validate() const;
};

// Standard normal distribution.
double normal_pdf(double x);
double normal_cdf(double x);
// Upper tail 1 - Phi(x), accurate for large x.
double normal_sf(double x);
double normal_quantile(double p);
// Upper (1 - p) quantile c_p, e.g. upper_quantile(0.025) = 1.959964.
inline double upper_quantile(double p) { return normal_quantile(1.0 - p); }

// Noncentral chi-squared CDF Psi_d(x; lambda) by a Poisson mixture of central
// chi-squared CDFs, summed outward from the modal Poisson index.
double noncentral_chisq_cdf(double x, int d, double lambda);
double noncentral_chisq_quantile(double p, int d, double lambda);

using ScalarFn = std::function<double(double)>;

// Adaptive Gauss-Kronrod on [lo, hi]; both ends finite.
double integrate(const ScalarFn& f, double lo, double hi, double abs_tol,
                 std::span<const double> breakpoints = {});

// Integral of f(u) phi(u) over (lo, hi). Infinite limits are cut at |u| = 8.5.
// Breakpoints mark kinks of f; each smooth piece is integrated separately.
double gauss_weighted_integral(const ScalarFn& f, double lo, double hi,
                               Tolerance tol = Tolerance::integral(),
                               std::span<const double> breakpoints = {});

constexpr double kNormalCut = 8.5;

struct RootResult {
    double x = 0.0;
    int iterations = 0;
};

// g nondecreasing on [lo, hi] with g(lo) <= 0 <= g(hi). Brent's method with a
// bisection fallback; stops once the bracket is narrower than tol.abs_tol.
RootResult find_root_monotone(const ScalarFn& g, double lo, double hi,
                              Tolerance tol = Tolerance::root());

struct MinResult {
    double argmin = 0.0;
    double min = 0.0;
};

// Dense grid scan followed by golden-section refinement in the best cell, down to
// x_tol (0 selects 1e-12 relative).
MinResult minimize_on_interval(const ScalarFn& f, double lo, double hi, int grid = 512, double x_tol = 0.0);

struct QmcResult {
    double value = 0.0;
    double std_error = 0.0;
};

using VectorFn = std::function<double(std::span<const double>)>;

// Randomised QMC estimate of E[f(Z)], Z ~ N(0, I_dim). Digitally shifted Sobol
// points, one independent shift per replicate; stderr from replicate spread.
QmcResult qmc_integrate(const VectorFn& f, const QmcConfig& cfg);

// Raw Sobol points in [0,1)^dim (unscrambled); exposed for tests.
std::vector<double> sobol_points(std::size_t n, std::size_t dim);
constexpr std::size_t kSobolMaxDim = 10;

}  // namespace bval
