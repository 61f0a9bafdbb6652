#include "bval/dependence.hpp"

#include <algorithm>
#include <cmath>

#include "bval/error.hpp"

namespace bval {

DecorrelationMap decorrelate(const EstimatorPair& pair) {
    pair.validate();
    DecorrelationMap m;
    m.original = pair;
    m.kappa = pair.rho * std::sqrt(pair.sigma1_sq / pair.sigma0_sq);
    const double one_minus = 1.0 - m.kappa;
    if (std::fabs(one_minus) <= 1e-12 * std::max(1.0, std::fabs(m.kappa)))
        throw SingularError("rho * sigma1 = sigma0: the biased estimator cannot be decorrelated");
    m.scale = std::fabs(one_minus);
    m.pair_prime = pair;
    m.pair_prime.rho = 0.0;
    if (pair.rho == 0.0) return m;
    m.pair_prime.tau1_hat = (pair.tau1_hat - m.kappa * pair.tau0_hat) / one_minus;
    m.pair_prime.sigma1_sq = (1.0 - pair.rho * pair.rho) * pair.sigma1_sq / (one_minus * one_minus);
    if (!(m.pair_prime.sigma1_sq > 0.0))
        throw DomainError("|rho| = 1 leaves the decorrelated biased estimator with zero variance");
    if (m.scale < kScaleWarn) {
        m.ill_conditioned = true;
        m.warning = "rho * sigma1 / sigma0 is close to 1; decorrelated bias bounds are inflated by 1/scale";
    }
    return m;
}

double map_bias_bound(double b, const DecorrelationMap& map, MapDirection direction) {
    return direction == MapDirection::ToPrime ? b / map.scale : map.scale * b;
}

IntervalResult interval_dependent(Kind kind, Side side, const EstimatorPair& pair, double b, double zeta,
                                  double alpha) {
    const DecorrelationMap m = decorrelate(pair);
    IntervalResult r = interval(kind, side, m.pair_prime, map_bias_bound(b, m, MapDirection::ToPrime), zeta, alpha);
    r.bound_b = {b};
    if (m.ill_conditioned) r.diagnostics.note = m.warning;
    return r;
}

DependentBValue b_value_dependent(Kind kind, const EstimatorPair& pair, double zeta, double alpha, Side side) {
    DependentBValue out;
    out.map = decorrelate(pair);
    out.prime = b_value(kind, out.map.pair_prime, zeta, alpha, side);
    out.original = out.prime;
    if (out.prime.kase == BValueCase::Finite)
        out.original.value = map_bias_bound(out.prime.value, out.map, MapDirection::FromPrime);
    if (out.map.ill_conditioned) out.original.note = out.map.warning;
    return out;
}

}  // namespace bval
