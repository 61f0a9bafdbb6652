#pragma once

// b-values: the smallest bias bound at which the interval (or region) reaches
// the null value 0, and their per-direction analogue for vector bias bounds.

#include <functional>
#include <string>
#include <vector>

#include "bval/coverage.hpp"
#include "bval/estimators.hpp"

namespace bval {

enum class BValueCase { Zero, Finite, Infinite };

const char* to_string(BValueCase c);

struct BValue {
    double value = 0.0;  // +inf for Infinite
    BValueCase kase = BValueCase::Zero;
    Kind kind = Kind::PW;
    double zeta = 0.05;
    // Worst-case coverage at the observed length minus 1 - zeta, at b = value.
    double residual = 0.0;
    int evaluations = 0;
    std::string note;
};

// Radii beyond this are reported as infinite.
constexpr double kBValueCap = 1e6;

// The PT infinite-case check searches |t| up to max(this, pretest reach); past the
// reach the pretest rejects with probability above 1 - Phi(-9).
constexpr double kPretestInfinityProbe = 50.0;

// 0 lies in the interval at bound b iff the worst-case coverage at the observed
// length |tau_hat| / pw_scale is at most 1 - zeta; b* is the root of that
// coverage in b. Requires rho = 0.
BValue b_value(Kind kind, const EstimatorPair& pair, double zeta, double alpha, Side side = Side::TwoSided);

// inf{b >= 0 : curve(b) >= observed} for a nondecreasing curve, by bracketing and
// Brent. Throws ContractError when the evaluated points show a decrease.
BValue b_value_generic(const std::function<double(double)>& curve, double observed, double tol = 1e-11);

// The generic route fed with half-lengths from the interval solver.
BValue b_value_by_curve(Kind kind, const EstimatorPair& pair, double zeta, double alpha,
                        Side side = Side::TwoSided);

struct SurfaceRay {
    std::vector<double> direction;  // unit vector, nonnegative entries
    double radius = 0.0;            // +inf when the ray never reaches the region boundary
    BValueCase kase = BValueCase::Zero;
    double residual = 0.0;
    std::string error;  // set when the ray failed; radius is NaN then
    int error_code = 0;
    std::string note;
};

struct BSurface {
    Kind kind = Kind::PW;
    double zeta = 0.05;
    std::vector<SurfaceRay> rays;
};

// n_rays directions spread evenly in angle over the positive quadrant (dim 2),
// or the single direction (1) for dim 1.
std::vector<std::vector<double>> default_directions(int dim, int n_rays = 33);

BSurface b_surface(Kind kind, const MultiProblem& problem, double zeta,
                   const std::vector<std::vector<double>>& directions, int threads = 1);
BSurface b_surface(Kind kind, const FusionProblem& problem, double zeta, double alpha,
                   const std::vector<std::vector<double>>& directions, int threads = 1);

}  // namespace bval
