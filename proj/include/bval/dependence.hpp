#pragma once

// Correlated pairs: tau1_hat' = (tau1_hat - kappa tau0_hat) / (1 - kappa) with
// kappa = rho sigma1 / sigma0 is independent of tau0_hat and has bias
// Delta / (1 - kappa), so every independent-case tool applies after rescaling b.

#include <string>

#include "bval/bvalue.hpp"
#include "bval/solver.hpp"

namespace bval {

struct DecorrelationMap {
    EstimatorPair original;
    EstimatorPair pair_prime;  // rho = 0
    double kappa = 0.0;
    double scale = 1.0;  // |1 - kappa|; b' = b / scale
    bool ill_conditioned = false;
    std::string warning;
};

// Below this scale the reparametrization is flagged as ill-conditioned.
constexpr double kScaleWarn = 1e-3;

DecorrelationMap decorrelate(const EstimatorPair& pair);

enum class MapDirection { ToPrime, FromPrime };

double map_bias_bound(double b, const DecorrelationMap& map, MapDirection direction);

// Interval for a possibly correlated pair at bias bound b on the original scale.
IntervalResult interval_dependent(Kind kind, Side side, const EstimatorPair& pair, double b, double zeta,
                                  double alpha);

struct DependentBValue {
    DecorrelationMap map;
    BValue prime;     // b-value of the decorrelated pair
    BValue original;  // scale * prime
};

DependentBValue b_value_dependent(Kind kind, const EstimatorPair& pair, double zeta, double alpha,
                                  Side side = Side::TwoSided);

}  // namespace bval
