#pragma once

// Monte Carlo reference for the coverage integrals and quantiles. Draws are a
// pure function of (seed, draw index, stream), so results do not depend on the
// number of threads.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bval/coverage.hpp"
#include "bval/estimators.hpp"

namespace bval {

struct McConfig {
    std::size_t n_draws = 200000;
    std::uint64_t seed = 42;
    bool antithetic = true;  // draws come in (z, -z) pairs; n_draws is rounded up to even
    int threads = 1;
    void validate() const;  // n_draws >= 1000
};

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

// Standard normal number `stream` of draw `index`.
double counter_normal(std::uint64_t seed, std::uint64_t index, std::uint32_t stream);

enum class McRoute {
    Direct,          // draw (tau0_hat, tau1_hat) and apply the estimator
    Representation,  // closed-form mixture of the estimation error (independent univariate pairs only)
};

// True tau is 0 throughout; delta is the bias of tau1_hat.
struct UnivariateModel {
    double sigma0_sq = 1.0;
    double sigma1_sq = 1.0;
    double rho = 0.0;
    double delta = 0.0;
};

// Fraction of draws with 0 inside center -/+ half_length_scaled (two-sided) or
// above center - half_length_scaled (lower). Correlated draws are decorrelated with
// the known rho before the estimator is applied.
McEstimate mc_coverage_univariate(Kind kind, Side side, const UnivariateModel& model, double half_length_scaled,
                                  double alpha, const McConfig& cfg, McRoute route = McRoute::Direct);

// Region {tau : (center - tau)' metric (center - tau) <= M}. Uses the covariances
// and shrinkage of `problem`; its estimates are ignored.
McEstimate mc_coverage_region(Kind kind, const MultiProblem& problem, const Eigen::VectorXd& delta, double M,
                              const McConfig& cfg);

// Fusion interval center -/+ half_length_scaled with biases delta_j of the sources.
McEstimate mc_coverage_fusion(Kind kind, const FusionProblem& problem, const std::vector<double>& delta,
                              double half_length_scaled, double alpha, const McConfig& cfg);

enum class QuantileDist { FoldedNormal, NoncentralChisq, EstimatorAbsError };

struct QuantileSpec {
    QuantileDist dist = QuantileDist::FoldedNormal;
    double shift = 0.0;   // folded normal |N(shift, 1)|
    int dof = 1;          // noncentral chi-squared
    double lambda = 0.0;  // noncentrality
    Kind kind = Kind::PW;  // |tau_hat - tau| of this estimator under `model`
    UnivariateModel model;
    double alpha = 0.05;
};

double mc_quantile(const QuantileSpec& spec, double p, const McConfig& cfg);

}  // namespace bval
